#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "sagmec/distributions.hpp"
#include "sagmec/mlp.hpp"
#include "sagmec/sac.hpp"

namespace sagmec {

/// The merged behaviour policy: a factored product of a multi-head categorical
/// and a squashed diagonal Gaussian.
struct HybridPolicy {
  HeadLayout heads;
  int act_dim = 0;
  Mlp discrete;    // obs -> concatenated logits
  Mlp continuous;  // obs -> [mean | raw log std]
  Adam opt_discrete, opt_continuous;

  static HybridPolicy make(int obs_dim, const HeadLayout& heads, int act_dim,
                           const std::vector<int>& hidden, double lr, std::mt19937_64& rng,
                           double final_scale = 0.01);

  struct Sample {
    std::vector<int> arms;
    Eigen::VectorXd u;  // pre-squash continuous point
    Eigen::VectorXd a;  // tanh(u)
  };

  Sample sample(const Eigen::VectorXd& obs, const DiscreteMask& mask, std::mt19937_64& rng,
                double log_std_floor = -1e9) const;
  /// Deterministic action: per-head argmax and the squashed mean.
  Sample mode(const Eigen::VectorXd& obs, const DiscreteMask& mask) const;
};

struct MpoParams {
  double chi_discrete = 0.05;    // per-update KL budget, categorical factor
  double chi_continuous = 0.05;  // per-update KL budget, Gaussian factor
  double kl_epsilon = 0.1;       // E-step bound driving the temperature
  int candidates = 8;
  int fit_steps = 10;
  double fit_lr = 1e-3;
  double explore_log_std_floor = -2.5;  // sampling-time exploration floor
};

struct MpoDiagnostics {
  bool updated = false;
  double eta = 0;
  double kl_discrete = 0;
  double kl_continuous = 0;
  double weight_spread = 0;  // max - min candidate weight
};

/// KL statistics of `to` against `from` on a batch of states: the categorical
/// term sums per-head KLs; the Gaussian term is averaged over the number of
/// discrete arms.
struct HybridKl {
  double discrete = 0;
  double continuous = 0;
};
HybridKl hybrid_kl(const HybridPolicy& from, const HybridPolicy& to, const Eigen::MatrixXd& states,
                   const std::vector<const DiscreteMask*>& masks);

/// Temperature from the one-dimensional dual of the E-step, solved by golden
/// section on log eta.
double solve_eta(const Eigen::MatrixXd& q_values, double kl_epsilon);

/// Weighted maximum-likelihood fit of the policy to candidate actions, early
/// stopped per factor when its KL budget would be exceeded. Candidates are
/// per state: arms[c][i] and u[c].row(i).
MpoDiagnostics fit_hybrid(HybridPolicy& policy, const HybridPolicy& reference,
                          const Eigen::MatrixXd& states,
                          const std::vector<const DiscreteMask*>& masks,
                          const std::vector<Eigen::MatrixXi>& cand_arms,
                          const std::vector<Eigen::MatrixXd>& cand_u,
                          const Eigen::MatrixXd& weights, const MpoParams& params);

/// Full E/M update of the hybrid policy from the two agents' critics.
MpoDiagnostics mpo_combine(HybridPolicy& ell, HybridPolicy& ell_bar, const DiscreteAgent& dis,
                           const ContinuousAgent& con, const Eigen::MatrixXd& states,
                           const std::vector<const DiscreteMask*>& masks, const MpoParams& params,
                           std::mt19937_64& rng);

}  // namespace sagmec
