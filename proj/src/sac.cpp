#include "sagmec/sac.hpp"

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

DiscreteAgent DiscreteAgent::make(int obs_dim, const HeadLayout& heads,
                                  const std::vector<int>& hidden, double lr, std::mt19937_64& rng,
                                  double policy_final_scale) {
  DiscreteAgent a;
  a.heads = heads;
  a.value = Mlp::make(net_widths(obs_dim, hidden, 1), rng);
  a.soft_q = Mlp::make(net_widths(obs_dim, hidden, heads.total), rng);
  a.policy = Mlp::make(net_widths(obs_dim, hidden, heads.total), rng, policy_final_scale);
  a.target_value = a.value;
  a.opt_value.lr = a.opt_q.lr = a.opt_policy.lr = lr;
  return a;
}

ContinuousAgent ContinuousAgent::make(int obs_dim, int act_dim, const std::vector<int>& hidden,
                                      double lr, std::mt19937_64& rng, double policy_final_scale) {
  ContinuousAgent a;
  a.act_dim = act_dim;
  a.value = Mlp::make(net_widths(obs_dim, hidden, 1), rng);
  a.soft_q = Mlp::make(net_widths(obs_dim + act_dim, hidden, 1), rng);
  a.policy = Mlp::make(net_widths(obs_dim, hidden, 2 * act_dim), rng, policy_final_scale);
  a.target_value = a.value;
  a.opt_value.lr = a.opt_q.lr = a.opt_policy.lr = lr;
  return a;
}

Batch make_batch(const std::vector<const Transition*>& rows) {
  if (rows.empty()) throw std::invalid_argument("make_batch: empty batch");
  const int B = static_cast<int>(rows.size());
  const int obs_dim = static_cast<int>(rows[0]->obs.size());
  const int H = static_cast<int>(rows[0]->arms.size());
  const int D = static_cast<int>(rows[0]->cont.size());

  Batch b;
  b.obs.resize(B, obs_dim);
  b.next_obs.resize(B, obs_dim);
  b.arms.resize(B, H);
  b.cont.resize(B, D);
  b.reward.resize(B);
  b.done.resize(B);
  b.masks.resize(static_cast<size_t>(B));
  b.assist_head.resize(B);
  b.assist_arm.resize(B);
  for (int i = 0; i < B; ++i) {
    const Transition& t = *rows[static_cast<size_t>(i)];
    b.obs.row(i) = t.obs.transpose();
    b.next_obs.row(i) = t.next_obs.transpose();
    for (int h = 0; h < H; ++h) b.arms(i, h) = t.arms[static_cast<size_t>(h)];
    b.cont.row(i) = t.cont.transpose();
    b.reward[i] = t.reward;
    b.done[i] = t.done ? 1.0 : 0.0;
    b.masks[static_cast<size_t>(i)] = &t.mask;
    b.assist_head[i] = t.assist ? t.assist_head : -1;
    b.assist_arm[i] = t.assist ? t.assist_arm : -1;
  }
  return b;
}

LossResult discrete_value_loss(const DiscreteAgent& agent, const Batch& batch, double alpha) {
  const int B = batch.size();
  MlpWorkspace ws;
  Eigen::MatrixXd v = agent.value.forward(batch.obs, &ws);         // B x 1
  const Eigen::MatrixXd q = agent.soft_q.forward(batch.obs);       // B x total
  const Eigen::MatrixXd logits = agent.policy.forward(batch.obs);  // B x total

  Eigen::VectorXd target(B);
  for (int i = 0; i < B; ++i) {
    const Eigen::VectorXd probs = masked_probs_row(agent.heads, logits.row(i).transpose(), *batch.masks[i]);
    double y = 0;
    for (int h = 0; h < agent.heads.n_heads(); ++h) {
      const int off = agent.heads.offsets[h], sz = agent.heads.sizes[h];
      for (int j = 0; j < sz; ++j) {
        const double p = probs[off + j];
        if (p <= 0) continue;
        y += p * (q(i, off + j) - alpha * std::log(p));
      }
    }
    target[i] = y;
  }

  const Eigen::VectorXd resid = v.col(0) - target;
  LossResult res;
  res.loss = 0.5 * resid.squaredNorm() / B;
  Eigen::MatrixXd dv = (resid / B).matrix();
  res.grads = agent.value.backward(ws, dv);
  return res;
}

LossResult discrete_soft_q_loss(const DiscreteAgent& agent, const Batch& batch, double discount) {
  const int B = batch.size();
  MlpWorkspace ws;
  const Eigen::MatrixXd q = agent.soft_q.forward(batch.obs, &ws);  // B x total
  const Eigen::MatrixXd v_next = agent.target_value.forward(batch.next_obs);

  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(B, agent.heads.total);
  double loss = 0;
  for (int i = 0; i < B; ++i) {
    if (batch.assist_head[i] >= 0) {
      // Assist pair: drive the masked arm's Q value to zero.
      const int idx = agent.heads.offsets[batch.assist_head[i]] + batch.assist_arm[i];
      const double resid = q(i, idx) - 0.0;
      loss += 0.5 * resid * resid;
      dq(i, idx) = resid / B;
      continue;
    }
    double qi = 0;
    for (int h = 0; h < agent.heads.n_heads(); ++h)
      qi += q(i, agent.heads.offsets[h] + batch.arms(i, h));
    const double y = batch.reward[i] + discount * (1.0 - batch.done[i]) * v_next(i, 0);
    const double resid = qi - y;
    loss += 0.5 * resid * resid;
    for (int h = 0; h < agent.heads.n_heads(); ++h)
      dq(i, agent.heads.offsets[h] + batch.arms(i, h)) += resid / B;
  }

  LossResult res;
  res.loss = loss / B;
  res.grads = agent.soft_q.backward(ws, dq);
  return res;
}

LossResult discrete_policy_loss(const DiscreteAgent& agent, const Batch& batch, double alpha) {
  const int B = batch.size();
  MlpWorkspace ws;
  const Eigen::MatrixXd logits = agent.policy.forward(batch.obs, &ws);
  const Eigen::MatrixXd q = agent.soft_q.forward(batch.obs);

  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(B, agent.heads.total);
  double loss = 0;
  for (int i = 0; i < B; ++i) {
    const Eigen::VectorXd probs = masked_probs_row(agent.heads, logits.row(i).transpose(), *batch.masks[i]);
    for (int h = 0; h < agent.heads.n_heads(); ++h) {
      const int off = agent.heads.offsets[h], sz = agent.heads.sizes[h];
      double f_head = 0;
      for (int j = 0; j < sz; ++j) {
        const double p = probs[off + j];
        if (p <= 0) continue;
        f_head += p * (alpha * std::log(p) - q(i, off + j));
      }
      loss += f_head;
      for (int j = 0; j < sz; ++j) {
        const double p = probs[off + j];
        if (p <= 0) continue;
        dlogits(i, off + j) = p * ((alpha * std::log(p) - q(i, off + j)) - f_head) / B;
      }
    }
  }

  LossResult res;
  res.loss = loss / B;
  res.grads = agent.policy.backward(ws, dlogits);
  return res;
}

LossResult continuous_value_loss(const ContinuousAgent& agent, const Batch& batch, double alpha,
                                 const Eigen::MatrixXd& noise) {
  const int B = batch.size();
  MlpWorkspace ws;
  Eigen::MatrixXd v = agent.value.forward(batch.obs, &ws);

  const Eigen::MatrixXd head = agent.policy.forward(batch.obs);
  const Eigen::MatrixXd mean = head.leftCols(agent.act_dim);
  const Eigen::MatrixXd log_std = SquashedGaussian::clamp_log_std(head.rightCols(agent.act_dim));
  const Eigen::MatrixXd u = SquashedGaussian::presquash(mean, log_std, noise);
  const Eigen::MatrixXd a = u.array().tanh();

  Eigen::MatrixXd qin(B, batch.obs.cols() + agent.act_dim);
  qin << batch.obs, a;
  const Eigen::MatrixXd q = agent.soft_q.forward(qin);
  const Eigen::VectorXd logp = SquashedGaussian::log_prob(mean, log_std, u);

  const Eigen::VectorXd target = q.col(0) - alpha * logp;
  const Eigen::VectorXd resid = v.col(0) - target;
  LossResult res;
  res.loss = 0.5 * resid.squaredNorm() / B;
  res.grads = agent.value.backward(ws, (resid / B).matrix());
  return res;
}

LossResult continuous_soft_q_loss(const ContinuousAgent& agent, const Batch& batch, double discount) {
  const int B = batch.size();
  Eigen::MatrixXd qin(B, batch.obs.cols() + agent.act_dim);
  qin << batch.obs, batch.cont;
  MlpWorkspace ws;
  const Eigen::MatrixXd q = agent.soft_q.forward(qin, &ws);
  const Eigen::MatrixXd v_next = agent.target_value.forward(batch.next_obs);

  // Assist pairs target one discrete arm; they carry no executed continuous
  // action, so they do not constrain this critic.
  Eigen::ArrayXd live = (batch.assist_head.array() < 0).cast<double>();
  const double n_live = std::max(1.0, live.sum());

  const Eigen::VectorXd target =
      batch.reward.array() + discount * (1.0 - batch.done.array()) * v_next.col(0).array();
  const Eigen::VectorXd resid = (q.col(0) - target).array() * live;
  LossResult res;
  res.loss = 0.5 * resid.squaredNorm() / n_live;
  res.grads = agent.soft_q.backward(ws, (resid / n_live).matrix());
  return res;
}

LossResult continuous_policy_loss(const ContinuousAgent& agent, const Batch& batch, double alpha,
                                  const Eigen::MatrixXd& noise) {
  const int B = batch.size();
  const int D = agent.act_dim;
  MlpWorkspace ws;
  const Eigen::MatrixXd head = agent.policy.forward(batch.obs, &ws);
  const Eigen::MatrixXd mean = head.leftCols(D);
  const Eigen::MatrixXd raw_log_std = head.rightCols(D);
  const Eigen::MatrixXd log_std = SquashedGaussian::clamp_log_std(raw_log_std);
  const Eigen::ArrayXXd std = log_std.array().exp();
  const Eigen::MatrixXd u = SquashedGaussian::presquash(mean, log_std, noise);
  const Eigen::ArrayXXd a = u.array().tanh();

  Eigen::MatrixXd qin(B, batch.obs.cols() + D);
  qin << batch.obs, a.matrix();
  MlpWorkspace q_ws;
  const Eigen::MatrixXd q = agent.soft_q.forward(qin, &q_ws);
  const Eigen::VectorXd logp = SquashedGaussian::log_prob(mean, log_std, u);

  LossResult res;
  res.loss = (alpha * logp.array() - q.col(0).array()).mean();

  // dQ/da via the critic, without touching critic parameters.
  Eigen::MatrixXd dq_out = Eigen::MatrixXd::Constant(B, 1, -1.0 / B);
  Eigen::MatrixXd dqin;
  agent.soft_q.backward(q_ws, dq_out, &dqin);
  const Eigen::ArrayXXd dJ_da = dqin.rightCols(D).array();  // already includes the -1/B factor

  const Eigen::ArrayXXd one_m_a2 = 1.0 - a.square();
  const Eigen::ArrayXXd tanh_corr = 2.0 * a * one_m_a2 / (one_m_a2 + SquashedGaussian::kTanhEps);

  // dJ/du: alpha * dlogp/du + dJ/da * da/du
  const Eigen::ArrayXXd dJ_du = (alpha / B) * tanh_corr + dJ_da * one_m_a2;
  const Eigen::ArrayXXd d_mean = dJ_du;
  Eigen::ArrayXXd d_log_std = dJ_du * std * noise.array() + (-alpha / B);
  // clamp gate: no gradient where the raw output sits outside the band
  const Eigen::ArrayXXd gate = ((raw_log_std.array() > SquashedGaussian::kLogStdMin) &&
                                (raw_log_std.array() < SquashedGaussian::kLogStdMax))
                                   .cast<double>();
  d_log_std *= gate;

  Eigen::MatrixXd d_head(B, 2 * D);
  d_head << d_mean.matrix(), d_log_std.matrix();
  res.grads = agent.policy.backward(ws, d_head);
  return res;
}

Eigen::VectorXd discrete_q_row(const DiscreteAgent& agent, const Eigen::VectorXd& obs) {
  return agent.soft_q.forward(obs.transpose()).row(0).transpose();
}

double discrete_q_joint(const DiscreteAgent& agent, const Eigen::VectorXd& obs,
                        const std::vector<int>& arms) {
  const Eigen::VectorXd q = discrete_q_row(agent, obs);
  double sum = 0;
  for (int h = 0; h < agent.heads.n_heads(); ++h)
    sum += q[agent.heads.offsets[h] + arms[static_cast<size_t>(h)]];
  return sum;
}

std::vector<Transition> decision_assist_pairs(const Eigen::VectorXd& obs, const DiscreteMask& mask,
                                              const HeadLayout& heads, int cont_dim) {
  std::vector<Transition> pairs;
  for (int h = 0; h < heads.n_heads(); ++h) {
    for (int j = 0; j < heads.sizes[h]; ++j) {
      if (mask[static_cast<size_t>(h)][static_cast<size_t>(j)]) continue;
      Transition t;
      t.obs = obs;
      t.next_obs = obs;
      t.arms.assign(static_cast<size_t>(heads.n_heads()), 0);
      t.arms[static_cast<size_t>(h)] = j;
      t.cont = Eigen::VectorXd::Zero(cont_dim);
      t.reward = 0;
      t.done = true;
      t.mask = mask;
      t.assist = true;
      t.assist_head = h;
      t.assist_arm = j;
      pairs.push_back(std::move(t));
    }
  }
  return pairs;
}

}  // namespace sagmec
