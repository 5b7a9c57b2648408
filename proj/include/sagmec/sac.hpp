#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "sagmec/distributions.hpp"
#include "sagmec/mlp.hpp"
#include "sagmec/replay.hpp"

namespace sagmec {

/// Discrete SAC agent over a multi-head categorical action. The soft-Q net
/// emits one value per arm; the joint Q of an action is the sum over heads of
/// the selected arms' values, matching the factored policy.
struct DiscreteAgent {
  HeadLayout heads;
  Mlp value, soft_q, policy, target_value;
  Adam opt_value, opt_q, opt_policy;

  static DiscreteAgent make(int obs_dim, const HeadLayout& heads, const std::vector<int>& hidden,
                            double lr, std::mt19937_64& rng, double policy_final_scale = 0.01);
};

/// Continuous SAC agent with a squashed-Gaussian policy head.
struct ContinuousAgent {
  int act_dim = 0;
  Mlp value, soft_q, policy, target_value;  // soft_q input: [obs, action]
  Adam opt_value, opt_q, opt_policy;

  static ContinuousAgent make(int obs_dim, int act_dim, const std::vector<int>& hidden, double lr,
                              std::mt19937_64& rng, double policy_final_scale = 0.01);
};

/// Column-major batch assembled from sampled transitions.
struct Batch {
  Eigen::MatrixXd obs, next_obs;  // B x obs_dim
  Eigen::MatrixXi arms;           // B x H
  Eigen::MatrixXd cont;           // B x D
  Eigen::VectorXd reward, done;   // B
  std::vector<const DiscreteMask*> masks;
  Eigen::VectorXi assist_head, assist_arm;  // -1 for env rows

  int size() const { return static_cast<int>(obs.rows()); }
};

Batch make_batch(const std::vector<const Transition*>& rows);

struct LossResult {
  double loss = 0;
  MlpGrads grads;
};

// Discrete-agent losses: expectations over arms are exact sums under the
// masked policy.
LossResult discrete_value_loss(const DiscreteAgent& agent, const Batch& batch, double alpha);
LossResult discrete_soft_q_loss(const DiscreteAgent& agent, const Batch& batch, double discount);
LossResult discrete_policy_loss(const DiscreteAgent& agent, const Batch& batch, double alpha);

// Continuous-agent losses: one reparameterized sample per state, noise is
// passed explicitly so losses stay deterministic functions of their inputs.
LossResult continuous_value_loss(const ContinuousAgent& agent, const Batch& batch, double alpha,
                                 const Eigen::MatrixXd& noise);
LossResult continuous_soft_q_loss(const ContinuousAgent& agent, const Batch& batch, double discount);
LossResult continuous_policy_loss(const ContinuousAgent& agent, const Batch& batch, double alpha,
                                  const Eigen::MatrixXd& noise);

/// Per-arm Q values of the discrete critic for one state.
Eigen::VectorXd discrete_q_row(const DiscreteAgent& agent, const Eigen::VectorXd& obs);

/// Joint discrete Q of a specific arm tuple.
double discrete_q_joint(const DiscreteAgent& agent, const Eigen::VectorXd& obs,
                        const std::vector<int>& arms);

/// Zero-target training pairs for every unavailable discrete arm of `mask`.
/// No environment interaction is involved; pairs are terminal with reward 0.
std::vector<Transition> decision_assist_pairs(const Eigen::VectorXd& obs, const DiscreteMask& mask,
                                              const HeadLayout& heads, int cont_dim);

}  // namespace sagmec
