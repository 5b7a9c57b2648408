#include "sagmec/mpo.hpp"

#include <cmath>
#include <stdexcept>

namespace sagmec {

namespace {

std::vector<int> net_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w;
  w.push_back(in);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

HybridPolicy HybridPolicy::make(int obs_dim, const HeadLayout& heads, int act_dim,
                                const std::vector<int>& hidden, double lr, std::mt19937_64& rng,
                                double final_scale) {
  HybridPolicy p;
  p.heads = heads;
  p.act_dim = act_dim;
  p.discrete = Mlp::make(net_widths(obs_dim, hidden, heads.total), rng, final_scale);
  p.continuous = Mlp::make(net_widths(obs_dim, hidden, 2 * act_dim), rng, final_scale);
  p.opt_discrete.lr = p.opt_continuous.lr = lr;
  return p;
}

HybridPolicy::Sample HybridPolicy::sample(const Eigen::VectorXd& obs, const DiscreteMask& mask,
                                          std::mt19937_64& rng, double log_std_floor) const {
  Sample s;
  const Eigen::VectorXd logits = discrete.forward(obs.transpose()).row(0).transpose();
  const Eigen::VectorXd probs = masked_probs_row(heads, logits, mask);
  s.arms.resize(static_cast<size_t>(heads.n_heads()));
  for (int h = 0; h < heads.n_heads(); ++h)
    s.arms[static_cast<size_t>(h)] = sample_categorical(probs, heads.offsets[h], heads.sizes[h], rng);

  const Eigen::VectorXd head = continuous.forward(obs.transpose()).row(0).transpose();
  const Eigen::VectorXd mean = head.head(act_dim);
  const Eigen::VectorXd log_std = head.tail(act_dim)
                                      .array()
                                      .min(SquashedGaussian::kLogStdMax)
                                      .max(SquashedGaussian::kLogStdMin)
                                      .max(log_std_floor);
  std::normal_distribution<double> gauss(0.0, 1.0);
  s.u.resize(act_dim);
  for (int d = 0; d < act_dim; ++d) s.u[d] = mean[d] + std::exp(log_std[d]) * gauss(rng);
  s.a = s.u.array().tanh();
  return s;
}

HybridPolicy::Sample HybridPolicy::mode(const Eigen::VectorXd& obs, const DiscreteMask& mask) const {
  Sample s;
  const Eigen::VectorXd logits = discrete.forward(obs.transpose()).row(0).transpose();
  const Eigen::VectorXd probs = masked_probs_row(heads, logits, mask);
  s.arms.resize(static_cast<size_t>(heads.n_heads()));
  for (int h = 0; h < heads.n_heads(); ++h) {
    int best = 0;
    double best_p = -1;
    for (int j = 0; j < heads.sizes[h]; ++j)
      if (probs[heads.offsets[h] + j] > best_p) {
        best_p = probs[heads.offsets[h] + j];
        best = j;
      }
    s.arms[static_cast<size_t>(h)] = best;
  }
  const Eigen::VectorXd head = continuous.forward(obs.transpose()).row(0).transpose();
  s.u = head.head(act_dim);
  s.a = s.u.array().tanh();
  return s;
}

HybridKl hybrid_kl(const HybridPolicy& from, const HybridPolicy& to, const Eigen::MatrixXd& states,
                   const std::vector<const DiscreteMask*>& masks) {
  const int B = static_cast<int>(states.rows());
  const Eigen::MatrixXd logits_from = from.discrete.forward(states);
  const Eigen::MatrixXd logits_to = to.discrete.forward(states);
  const Eigen::MatrixXd head_from = from.continuous.forward(states);
  const Eigen::MatrixXd head_to = to.continuous.forward(states);
  const int D = from.act_dim;

  const Eigen::MatrixXd mean_from = head_from.leftCols(D);
  const Eigen::MatrixXd mean_to = head_to.leftCols(D);
  const Eigen::MatrixXd ls_from = SquashedGaussian::clamp_log_std(head_from.rightCols(D));
  const Eigen::MatrixXd ls_to = SquashedGaussian::clamp_log_std(head_to.rightCols(D));
  const Eigen::VectorXd gauss_kl = SquashedGaussian::gaussian_kl(mean_from, ls_from, mean_to, ls_to);

  HybridKl kl;
  for (int i = 0; i < B; ++i) {
    const Eigen::VectorXd p = masked_probs_row(from.heads, logits_from.row(i).transpose(), *masks[i]);
    const Eigen::VectorXd q = masked_probs_row(from.heads, logits_to.row(i).transpose(), *masks[i]);
    for (int h = 0; h < from.heads.n_heads(); ++h)
      kl.discrete += categorical_kl(p, q, from.heads.offsets[h], from.heads.sizes[h]);
    // One Gaussian factor shared by every discrete arm: the per-arm average
    // collapses to the single KL.
    kl.continuous += gauss_kl[i];
  }
  kl.discrete /= B;
  kl.continuous /= B;
  return kl;
}

double solve_eta(const Eigen::MatrixXd& q_values, double kl_epsilon) {
  const double q_max = q_values.maxCoeff();
  const double q_min = q_values.minCoeff();
  const double range = q_max - q_min;
  if (range <= 0) return 1.0;

  const int B = static_cast<int>(q_values.rows());
  const int C = static_cast<int>(q_values.cols());
  auto dual = [&](double eta) {
    double acc = 0;
    for (int i = 0; i < B; ++i) {
      const double row_max = q_values.row(i).maxCoeff();
      double s = 0;
      for (int c = 0; c < C; ++c) s += std::exp((q_values(i, c) - row_max) / eta);
      acc += row_max / eta + std::log(s / C);
    }
    return eta * kl_epsilon + eta * acc / B;
  };

  double lo = std::log(std::max(1e-9, range * 1e-6));
  double hi = std::log(range * 1e3 + 1.0);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = dual(std::exp(c1)), f2 = dual(std::exp(c2));
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = dual(std::exp(c1));
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = dual(std::exp(c2));
    }
  }
  return std::exp((a + b) / 2);
}

namespace {

struct ReferenceOutputs {
  Eigen::MatrixXd probs;  // masked, B x total
  Eigen::MatrixXd mean, log_std;
};

ReferenceOutputs reference_outputs(const HybridPolicy& ref, const Eigen::MatrixXd& states,
                                   const std::vector<const DiscreteMask*>& masks) {
  ReferenceOutputs out;
  const Eigen::MatrixXd logits = ref.discrete.forward(states);
  out.probs = masked_probs_batch(ref.heads, logits, masks);
  const Eigen::MatrixXd head = ref.continuous.forward(states);
  out.mean = head.leftCols(ref.act_dim);
  out.log_std = SquashedGaussian::clamp_log_std(head.rightCols(ref.act_dim));
  return out;
}

HybridKl kl_against_reference(const ReferenceOutputs& ref, const HybridPolicy& to,
                              const Eigen::MatrixXd& states,
                              const std::vector<const DiscreteMask*>& masks) {
  const int B = static_cast<int>(states.rows());
  const int D = to.act_dim;
  const Eigen::MatrixXd logits_to = to.discrete.forward(states);
  const Eigen::MatrixXd head_to = to.continuous.forward(states);
  const Eigen::MatrixXd mean_to = head_to.leftCols(D);
  const Eigen::MatrixXd ls_to = SquashedGaussian::clamp_log_std(head_to.rightCols(D));
  const Eigen::VectorXd gauss_kl =
      SquashedGaussian::gaussian_kl(ref.mean, ref.log_std, mean_to, ls_to);

  const Eigen::MatrixXd q = masked_probs_batch(to.heads, logits_to, masks);
  const Eigen::ArrayXXd p = ref.probs.array();
  // KL with the 0 log 0 = 0 convention; both sides share the same mask
  const Eigen::ArrayXXd terms =
      (p > 0).select(p * ((p + 1e-300).log() - (q.array().max(1e-12)).log()), Eigen::ArrayXXd::Zero(B, to.heads.total));
  HybridKl kl;
  kl.discrete = terms.sum() / B;
  kl.continuous = gauss_kl.sum() / B;
  return kl;
}

}  // namespace

MpoDiagnostics fit_hybrid(HybridPolicy& policy, const HybridPolicy& reference,
                          const Eigen::MatrixXd& states,
                          const std::vector<const DiscreteMask*>& masks,
                          const std::vector<Eigen::MatrixXi>& cand_arms,
                          const std::vector<Eigen::MatrixXd>& cand_u,
                          const Eigen::MatrixXd& weights, const MpoParams& params) {
  MpoDiagnostics diag;
  const int B = static_cast<int>(states.rows());
  const int C = static_cast<int>(cand_arms.size());
  const int D = policy.act_dim;
  const ReferenceOutputs ref = reference_outputs(reference, states, masks);

  bool discrete_frozen = false, continuous_frozen = false;
  int applied_steps = 0;
  const double lr_disc_entry = policy.opt_discrete.lr;
  const double lr_cont_entry = policy.opt_continuous.lr;
  for (int step = 0; step < params.fit_steps && !(discrete_frozen && continuous_frozen); ++step) {
    const Eigen::VectorXd disc_backup = policy.discrete.params();
    const Eigen::VectorXd cont_backup = policy.continuous.params();
    const Adam opt_disc_backup = policy.opt_discrete;
    const Adam opt_cont_backup = policy.opt_continuous;
    bool did_discrete = false, did_continuous = false;

    if (!discrete_frozen) {
      MlpWorkspace ws;
      const Eigen::MatrixXd logits = policy.discrete.forward(states, &ws);
      const int n_heads = policy.heads.n_heads();
      // candidate weights are normalized per state, so the expected-probs term
      // appears exactly once per head
      Eigen::MatrixXd dlogits = masked_probs_batch(policy.heads, logits, masks) / B;
      for (int c = 0; c < C; ++c)
        for (int i = 0; i < B; ++i)
          for (int h = 0; h < n_heads; ++h)
            dlogits(i, policy.heads.offsets[h] + cand_arms[static_cast<size_t>(c)](i, h)) -=
                weights(i, c) / B;
      adam_step(policy.discrete, policy.opt_discrete, policy.discrete.backward(ws, dlogits));
      did_discrete = true;
    }

    if (!continuous_frozen) {
      MlpWorkspace ws;
      const Eigen::MatrixXd head = policy.continuous.forward(states, &ws);
      const Eigen::MatrixXd mean = head.leftCols(D);
      const Eigen::MatrixXd raw_ls = head.rightCols(D);
      const Eigen::MatrixXd log_std = SquashedGaussian::clamp_log_std(raw_ls);
      const Eigen::ArrayXXd std_ = log_std.array().exp();
      const Eigen::ArrayXXd gate = ((raw_ls.array() > SquashedGaussian::kLogStdMin) &&
                                    (raw_ls.array() < SquashedGaussian::kLogStdMax))
                                       .cast<double>();
      Eigen::ArrayXXd d_mean = Eigen::ArrayXXd::Zero(B, D);
      Eigen::ArrayXXd d_ls = Eigen::ArrayXXd::Zero(B, D);
      for (int c = 0; c < C; ++c) {
        const Eigen::ArrayXXd z = (cand_u[static_cast<size_t>(c)].array() - mean.array()) / std_;
        const Eigen::ArrayXXd w = weights.col(c).replicate(1, D).array();
        d_mean += w * (-z / std_) / B;
        d_ls += w * (1.0 - z.square()) / B;
      }
      d_ls *= gate;
      Eigen::MatrixXd d_head(B, 2 * D);
      d_head << d_mean.matrix(), d_ls.matrix();
      adam_step(policy.continuous, policy.opt_continuous, policy.continuous.backward(ws, d_head));
      did_continuous = true;
    }

    // A step that overshoots its KL budget is rolled back and retried at a
    // smaller rate; a factor freezes once its rate underflows.
    const HybridKl kl = kl_against_reference(ref, policy, states, masks);
    if (did_discrete && kl.discrete > params.chi_discrete) {
      policy.discrete.set_params(disc_backup);
      policy.opt_discrete = opt_disc_backup;
      policy.opt_discrete.lr *= 0.5;
      if (policy.opt_discrete.lr < 1e-9) discrete_frozen = true;
      did_discrete = false;
    }
    if (did_continuous && kl.continuous > params.chi_continuous) {
      policy.continuous.set_params(cont_backup);
      policy.opt_continuous = opt_cont_backup;
      policy.opt_continuous.lr *= 0.5;
      if (policy.opt_continuous.lr < 1e-9) continuous_frozen = true;
      did_continuous = false;
    }
    if (did_discrete || did_continuous) ++applied_steps;
  }
  policy.opt_discrete.lr = lr_disc_entry;
  policy.opt_continuous.lr = lr_cont_entry;

  diag.updated = applied_steps > 0;
  const HybridKl kl = kl_against_reference(ref, policy, states, masks);
  diag.kl_discrete = kl.discrete;
  diag.kl_continuous = kl.continuous;
  return diag;
}

MpoDiagnostics mpo_combine(HybridPolicy& ell, HybridPolicy& ell_bar, const DiscreteAgent& dis,
                           const ContinuousAgent& con, const Eigen::MatrixXd& states,
                           const std::vector<const DiscreteMask*>& masks, const MpoParams& params,
                           std::mt19937_64& rng) {
  const int B = static_cast<int>(states.rows());
  const int C = params.candidates;
  const int H = ell.heads.n_heads();
  const int D = ell.act_dim;

  ell_bar = ell;

  // Candidate actions from the current policy, drawn off one batched forward.
  const ReferenceOutputs ref = reference_outputs(ell_bar, states, masks);
  std::vector<Eigen::MatrixXi> cand_arms(static_cast<size_t>(C), Eigen::MatrixXi(B, H));
  std::vector<Eigen::MatrixXd> cand_u(static_cast<size_t>(C), Eigen::MatrixXd(B, D));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < B; ++i) {
      for (int h = 0; h < H; ++h)
        cand_arms[static_cast<size_t>(c)](i, h) = sample_categorical(
            ref.probs.row(i).transpose(), ell.heads.offsets[h], ell.heads.sizes[h], rng);
      for (int d = 0; d < D; ++d)
        cand_u[static_cast<size_t>(c)](i, d) =
            ref.mean(i, d) +
            std::exp(std::max(ref.log_std(i, d), params.explore_log_std_floor)) * gauss(rng);
    }

  // Q-hat: sum of the two critics on the joint action.
  const Eigen::MatrixXd q_arm = dis.soft_q.forward(states);  // B x total
  Eigen::MatrixXd q_hat(B, C);
  for (int c = 0; c < C; ++c) {
    Eigen::MatrixXd qin(B, states.cols() + D);
    qin << states, cand_u[static_cast<size_t>(c)].array().tanh().matrix();
    const Eigen::MatrixXd qc = con.soft_q.forward(qin);
    for (int i = 0; i < B; ++i) {
      double qd = 0;
      for (int h = 0; h < H; ++h)
        qd += q_arm(i, ell.heads.offsets[h] + cand_arms[static_cast<size_t>(c)](i, h));
      q_hat(i, c) = qd + qc(i, 0);
    }
  }

  MpoDiagnostics diag;
  diag.weight_spread = q_hat.maxCoeff() - q_hat.minCoeff();
  if (diag.weight_spread <= 1e-12 * std::max(1.0, std::abs(q_hat.maxCoeff()))) {
    // Uniform reweighting carries no improvement signal: keep the current policy.
    diag.updated = false;
    return diag;
  }

  diag.eta = solve_eta(q_hat, params.kl_epsilon);
  Eigen::MatrixXd weights(B, C);
  for (int i = 0; i < B; ++i) {
    const double row_max = q_hat.row(i).maxCoeff();
    double z = 0;
    for (int c = 0; c < C; ++c) {
      weights(i, c) = std::exp((q_hat(i, c) - row_max) / diag.eta);
      z += weights(i, c);
    }
    weights.row(i) /= z;
  }

  MpoDiagnostics fit = fit_hybrid(ell, ell_bar, states, masks, cand_arms, cand_u, weights, params);
  fit.eta = diag.eta;
  fit.weight_spread = diag.weight_spread;
  return fit;
}

}  // namespace sagmec
