#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace sagmec {

/// Layout of a multi-head categorical: one softmax per head over its arms,
/// all logits concatenated in one row.
struct HeadLayout {
  std::vector<int> sizes;
  std::vector<int> offsets;
  int total = 0;

  static HeadLayout make(const std::vector<int>& sizes) {
    HeadLayout h;
    h.sizes = sizes;
    h.offsets.reserve(sizes.size());
    for (int s : sizes) {
      h.offsets.push_back(h.total);
      h.total += s;
    }
    return h;
  }
  int n_heads() const { return static_cast<int>(sizes.size()); }
};

using DiscreteMask = std::vector<std::vector<std::uint8_t>>;

/// Per-head masked softmax over one sample's logit row. Fully masked heads
/// fall back to uniform over all arms.
inline Eigen::VectorXd masked_probs_row(const HeadLayout& layout, const Eigen::VectorXd& logits,
                                        const DiscreteMask& mask) {
  Eigen::VectorXd probs(layout.total);
  for (int h = 0; h < layout.n_heads(); ++h) {
    const int off = layout.offsets[h], sz = layout.sizes[h];
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int j = 0; j < sz; ++j)
      if (mask[h][j]) {
        best = std::max(best, logits[off + j]);
        any = true;
      }
    if (!any) {
      probs.segment(off, sz).setConstant(1.0 / sz);
      continue;
    }
    double z = 0;
    for (int j = 0; j < sz; ++j) {
      const double e = mask[h][j] ? std::exp(logits[off + j] - best) : 0.0;
      probs[off + j] = e;
      z += e;
    }
    probs.segment(off, sz) /= z;
  }
  return probs;
}

/// Batched masked softmax: one row per sample, heads normalized independently.
inline Eigen::MatrixXd masked_probs_batch(const HeadLayout& layout, const Eigen::MatrixXd& logits,
                                          const std::vector<const DiscreteMask*>& masks) {
  const int B = static_cast<int>(logits.rows());
  Eigen::MatrixXd gate = Eigen::MatrixXd::Zero(B, layout.total);
  for (int i = 0; i < B; ++i)
    for (int h = 0; h < layout.n_heads(); ++h)
      for (int j = 0; j < layout.sizes[h]; ++j)
        gate(i, layout.offsets[h] + j) = (*masks[i])[h][j] ? 1.0 : 0.0;

  Eigen::MatrixXd probs(B, layout.total);
  for (int h = 0; h < layout.n_heads(); ++h) {
    const int off = layout.offsets[h], sz = layout.sizes[h];
    auto block = logits.middleCols(off, sz);
    auto g = gate.middleCols(off, sz);
    // -inf-free masked softmax: shift by the row max, zero the gated entries
    Eigen::VectorXd row_max = (block.array() * g.array() + (1.0 - g.array()) * -1e300)
                                  .rowwise()
                                  .maxCoeff();
    Eigen::ArrayXXd e = ((block.colwise() - row_max).array()).exp() * g.array();
    Eigen::VectorXd z = e.rowwise().sum();
    for (int i = 0; i < B; ++i) {
      if (z[i] <= 0) {
        probs.row(i).segment(off, sz).setConstant(1.0 / sz);  // fully masked head
      } else {
        probs.row(i).segment(off, sz) = (e.row(i) / z[i]).matrix();
      }
    }
  }
  return probs;
}

inline int sample_categorical(const Eigen::VectorXd& probs, int offset, int size,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng);
  for (int j = 0; j < size; ++j) {
    u -= probs[offset + j];
    if (u <= 0) return j;
  }
  return size - 1;
}

/// KL(p || q) between masked categoricals over one head segment.
inline double categorical_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q, int offset,
                             int size) {
  double kl = 0;
  for (int j = 0; j < size; ++j) {
    if (p[offset + j] <= 0) continue;
    kl += p[offset + j] * (std::log(p[offset + j]) - std::log(std::max(q[offset + j], 1e-12)));
  }
  return kl;
}

/// Diagonal squashed Gaussian: a = tanh(mean + exp(log_std) * noise), with the
/// standard change-of-variables correction in the log density.
struct SquashedGaussian {
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kTanhEps = 1e-6;

  /// Clamp raw head outputs into the allowed log-std band.
  static Eigen::MatrixXd clamp_log_std(const Eigen::MatrixXd& raw) {
    return raw.array().min(kLogStdMax).max(kLogStdMin);
  }

  /// Element-wise pre-squash sample u = mean + std * noise.
  static Eigen::MatrixXd presquash(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                   const Eigen::MatrixXd& noise) {
    return mean.array() + log_std.array().exp() * noise.array();
  }

  /// Row-wise log density of a = tanh(u) for u = mean + std * noise.
  static Eigen::VectorXd log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                  const Eigen::MatrixXd& u) {
    const Eigen::ArrayXXd std = log_std.array().exp();
    const Eigen::ArrayXXd z = (u.array() - mean.array()) / std;
    const Eigen::ArrayXXd a = u.array().tanh();
    Eigen::ArrayXXd per_dim = -log_std.array() - 0.5 * z.square() - 0.5 * std::log(2 * M_PI) -
                              (1.0 - a.square() + kTanhEps).log();
    return per_dim.rowwise().sum();
  }

  /// Log density evaluated at a stored pre-squash point (off-policy actions).
  static Eigen::VectorXd log_prob_at(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                     const Eigen::MatrixXd& u) {
    return log_prob(mean, log_std, u);
  }

  /// KL(p || q) between two diagonal Gaussians in pre-squash space, row-wise.
  static Eigen::VectorXd gaussian_kl(const Eigen::MatrixXd& mean_p, const Eigen::MatrixXd& log_std_p,
                                     const Eigen::MatrixXd& mean_q, const Eigen::MatrixXd& log_std_q) {
    const Eigen::ArrayXXd var_p = (2.0 * log_std_p.array()).exp();
    const Eigen::ArrayXXd var_q = (2.0 * log_std_q.array()).exp();
    Eigen::ArrayXXd per_dim = log_std_q.array() - log_std_p.array() +
                              (var_p + (mean_p.array() - mean_q.array()).square()) / (2.0 * var_q) -
                              0.5;
    return per_dim.rowwise().sum();
  }
};

inline double atanh_clamped(double a) {
  const double c = std::clamp(a, -1.0 + 1e-9, 1.0 - 1e-9);
  return 0.5 * std::log((1 + c) / (1 - c));
}

}  // namespace sagmec
