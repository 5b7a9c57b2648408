#include <doctest.h>

#include <cmath>
#include <random>

#include "sagmec/sac.hpp"

using namespace sagmec;

namespace {

constexpr double kAlpha = 0.2;
constexpr double kDiscount = 0.99;

struct Toy {
  HeadLayout heads;
  int obs_dim, act_dim;
  DiscreteAgent dis;
  ContinuousAgent con;
  std::vector<Transition> transitions;
  Eigen::MatrixXd noise;
};

DiscreteMask full_mask(const HeadLayout& heads) {
  DiscreteMask m;
  for (int s : heads.sizes) m.emplace_back(static_cast<size_t>(s), std::uint8_t{1});
  return m;
}

Toy make_toy(std::uint64_t seed, int batch = 6, bool with_assist = false) {
  std::mt19937_64 rng(seed);
  Toy toy{HeadLayout::make({2, 3}), 3, 2, {}, {}, {}, {}};
  toy.dis = DiscreteAgent::make(toy.obs_dim, toy.heads, {6, 5}, 3e-4, rng, 1.0);
  toy.con = ContinuousAgent::make(toy.obs_dim, toy.act_dim, {6, 5}, 3e-4, rng, 1.0);

  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < batch; ++i) {
    Transition t;
    t.obs = Eigen::VectorXd::NullaryExpr(toy.obs_dim, [&](Eigen::Index) { return uni(rng); });
    t.next_obs = Eigen::VectorXd::NullaryExpr(toy.obs_dim, [&](Eigen::Index) { return uni(rng); });
    t.mask = full_mask(toy.heads);
    if (i % 2 == 1) t.mask[1][2] = 0;  // exercise masked softmax paths
    t.arms.clear();
    for (int h = 0; h < toy.heads.n_heads(); ++h) {
      int arm;
      do {
        arm = std::uniform_int_distribution<int>(0, toy.heads.sizes[h] - 1)(rng);
      } while (!t.mask[h][arm]);
      t.arms.push_back(arm);
    }
    t.cont = Eigen::VectorXd::NullaryExpr(toy.act_dim, [&](Eigen::Index) { return 0.9 * uni(rng); });
    t.reward = uni(rng);
    t.done = coin(rng) == 1;
    toy.transitions.push_back(std::move(t));
  }
  if (with_assist) {
    DiscreteMask m = full_mask(toy.heads);
    m[0][1] = 0;
    m[1][0] = 0;
    Eigen::VectorXd obs =
        Eigen::VectorXd::NullaryExpr(toy.obs_dim, [&](Eigen::Index) { return uni(rng); });
    for (Transition& p : decision_assist_pairs(obs, m, toy.heads, toy.act_dim))
      toy.transitions.push_back(std::move(p));
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  toy.noise.resize(static_cast<int>(toy.transitions.size()), toy.act_dim);
  for (Eigen::Index i = 0; i < toy.noise.size(); ++i) toy.noise(i) = gauss(rng);
  return toy;
}

Batch batch_of(const Toy& toy) {
  std::vector<const Transition*> rows;
  for (const Transition& t : toy.transitions) rows.push_back(&t);
  return make_batch(rows);
}

// Max relative gradient error against central finite differences on one net.
template <typename LossFn>
double fd_error(Mlp& net, const MlpGrads& analytic, LossFn loss_only, double h = 1e-5) {
  const Eigen::VectorXd ga = Mlp::flatten(analytic);
  Eigen::VectorXd p = net.params();
  Eigen::VectorXd gf(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p[i] += h;
    net.set_params(p);
    const double up = loss_only();
    p[i] -= 2 * h;
    net.set_params(p);
    const double dn = loss_only();
    p[i] += h;
    net.set_params(p);
    gf[i] = (up - dn) / (2 * h);
  }
  return (ga - gf).lpNorm<Eigen::Infinity>() / std::max(gf.lpNorm<Eigen::Infinity>(), 1e-8);
}

// Constant-output nets make hand evaluation exact: zero weights, chosen biases.
void set_constant(Mlp& net, const Eigen::VectorXd& out_bias) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(net.n_params());
  p.tail(out_bias.size()) = out_bias;
  net.set_params(p);
}

}  // namespace

TEST_CASE("discrete value loss hand check on constant nets") {
  Toy toy = make_toy(11, 2);
  for (Transition& t : toy.transitions) t.mask = full_mask(toy.heads);  // uniform availability
  // V = 0.7; Q per arm = [0.1 0.4 | -0.2 0.3 0.5]; logits = [0.2 -0.1 | 0.0 0.3 -0.4]
  set_constant(toy.dis.value, Eigen::VectorXd::Constant(1, 0.7));
  Eigen::VectorXd q(5), z(5);
  q << 0.1, 0.4, -0.2, 0.3, 0.5;
  z << 0.2, -0.1, 0.0, 0.3, -0.4;
  set_constant(toy.dis.soft_q, q);
  set_constant(toy.dis.policy, z);

  // straight-line hand evaluation
  double y = 0;
  {
    const double e0 = std::exp(0.2), e1 = std::exp(-0.1);
    const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
    y += p0 * (0.1 - kAlpha * std::log(p0)) + p1 * (0.4 - kAlpha * std::log(p1));
    const double f0 = std::exp(0.0), f1 = std::exp(0.3), f2 = std::exp(-0.4);
    const double s = f0 + f1 + f2;
    y += f0 / s * (-0.2 - kAlpha * std::log(f0 / s)) + f1 / s * (0.3 - kAlpha * std::log(f1 / s)) +
         f2 / s * (0.5 - kAlpha * std::log(f2 / s));
  }
  const double expected = 0.5 * (0.7 - y) * (0.7 - y);

  const LossResult res = discrete_value_loss(toy.dis, batch_of(toy), kAlpha);
  CHECK(res.loss == doctest::Approx(expected).epsilon(1e-10));

  // setting V to the target term zeroes the loss
  set_constant(toy.dis.value, Eigen::VectorXd::Constant(1, y));
  CHECK(discrete_value_loss(toy.dis, batch_of(toy), kAlpha).loss ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discrete soft-q loss hand check") {
  Toy toy = make_toy(12, 1);
  Transition& t = toy.transitions[0];
  t.reward = 1.0;
  t.done = false;
  t.arms = {0, 0};
  // joint Q = 0.6 + 0.4 = 1.0, bootstrap 0 -> residual 0 -> loss 0
  Eigen::VectorXd q(5);
  q << 0.6, 0.0, 0.4, 0.0, 0.0;
  set_constant(toy.dis.soft_q, q);
  set_constant(toy.dis.target_value, Eigen::VectorXd::Constant(1, 0.0));
  CHECK(discrete_soft_q_loss(toy.dis, batch_of(toy), kDiscount).loss ==
        doctest::Approx(0.0).epsilon(1e-12));

  // with a nonzero bootstrap the residual is tau * V(s')
  set_constant(toy.dis.target_value, Eigen::VectorXd::Constant(1, 0.5));
  const double resid = 1.0 - (1.0 + kDiscount * 0.5);
  CHECK(discrete_soft_q_loss(toy.dis, batch_of(toy), kDiscount).loss ==
        doctest::Approx(0.5 * resid * resid).epsilon(1e-10));

  // terminal transitions drop the bootstrap term
  t.done = true;
  CHECK(discrete_soft_q_loss(toy.dis, batch_of(toy), kDiscount).loss ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discrete policy gradient vanishes for uniform policy with equal Q") {
  Toy toy = make_toy(13, 3);
  for (Transition& t : toy.transitions) t.mask = full_mask(toy.heads);
  set_constant(toy.dis.policy, Eigen::VectorXd::Zero(5));          // uniform
  set_constant(toy.dis.soft_q, Eigen::VectorXd::Constant(5, 0.3));  // equal arms
  const LossResult res = discrete_policy_loss(toy.dis, batch_of(toy), kAlpha);
  // every logit gradient cancels by symmetry
  CHECK(Mlp::flatten(res.grads).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("continuous soft-q loss hand check") {
  Toy toy = make_toy(14, 1);
  Transition& t = toy.transitions[0];
  t.reward = 1.0;
  t.done = false;
  set_constant(toy.con.soft_q, Eigen::VectorXd::Constant(1, 1.0));
  set_constant(toy.con.target_value, Eigen::VectorXd::Constant(1, 0.0));
  CHECK(continuous_soft_q_loss(toy.con, batch_of(toy), kDiscount).loss ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("continuous value loss hand check") {
  Toy toy = make_toy(15, 1);
  const double v0 = 0.4, q0 = 0.9, mean = 0.2, log_std = -0.5;
  set_constant(toy.con.value, Eigen::VectorXd::Constant(1, v0));
  set_constant(toy.con.soft_q, Eigen::VectorXd::Constant(1, q0));
  Eigen::VectorXd head(4);
  head << mean, mean, log_std, log_std;
  set_constant(toy.con.policy, head);

  // straight-line recomputation of the squashed-Gaussian log density
  double logp = 0;
  for (int d = 0; d < 2; ++d) {
    const double u = mean + std::exp(log_std) * toy.noise(0, d);
    const double a = std::tanh(u);
    logp += -log_std - 0.5 * toy.noise(0, d) * toy.noise(0, d) - 0.5 * std::log(2 * M_PI) -
            std::log(1.0 - a * a + 1e-6);
  }
  const double y = q0 - kAlpha * logp;
  const double expected = 0.5 * (v0 - y) * (v0 - y);
  CHECK(continuous_value_loss(toy.con, batch_of(toy), kAlpha, toy.noise).loss ==
        doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("all six loss gradients match finite differences on random toy nets") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Toy toy = make_toy(100 + seed, 6, /*with_assist=*/true);
    const Batch batch = batch_of(toy);

    {
      const LossResult res = discrete_value_loss(toy.dis, batch, kAlpha);
      const double err = fd_error(toy.dis.value, res.grads, [&] {
        return discrete_value_loss(toy.dis, batch, kAlpha).loss;
      });
      CHECK(err < 1e-4);
    }
    {
      const LossResult res = discrete_soft_q_loss(toy.dis, batch, kDiscount);
      const double err = fd_error(toy.dis.soft_q, res.grads, [&] {
        return discrete_soft_q_loss(toy.dis, batch, kDiscount).loss;
      });
      CHECK(err < 1e-4);
    }
    {
      const LossResult res = discrete_policy_loss(toy.dis, batch, kAlpha);
      const double err = fd_error(toy.dis.policy, res.grads, [&] {
        return discrete_policy_loss(toy.dis, batch, kAlpha).loss;
      });
      CHECK(err < 1e-4);
    }
    {
      const LossResult res = continuous_value_loss(toy.con, batch, kAlpha, toy.noise);
      const double err = fd_error(toy.con.value, res.grads, [&] {
        return continuous_value_loss(toy.con, batch, kAlpha, toy.noise).loss;
      });
      CHECK(err < 1e-4);
    }
    {
      const LossResult res = continuous_soft_q_loss(toy.con, batch, kDiscount);
      const double err = fd_error(toy.con.soft_q, res.grads, [&] {
        return continuous_soft_q_loss(toy.con, batch, kDiscount).loss;
      });
      CHECK(err < 1e-4);
    }
    {
      const LossResult res = continuous_policy_loss(toy.con, batch, kAlpha, toy.noise);
      const double err = fd_error(toy.con.policy, res.grads, [&] {
        return continuous_policy_loss(toy.con, batch, kAlpha, toy.noise).loss;
      });
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("losses are deterministic functions of their inputs") {
  Toy toy = make_toy(200, 8, true);
  const Batch batch = batch_of(toy);
  CHECK(discrete_value_loss(toy.dis, batch, kAlpha).loss ==
        discrete_value_loss(toy.dis, batch, kAlpha).loss);
  CHECK(continuous_policy_loss(toy.con, batch, kAlpha, toy.noise).loss ==
        continuous_policy_loss(toy.con, batch, kAlpha, toy.noise).loss);
}

TEST_CASE("decision assist pairs enumerate masked arms") {
  const HeadLayout heads = HeadLayout::make({3, 4});
  DiscreteMask mask;
  mask.push_back({1, 1, 1});
  mask.push_back({1, 1, 1, 1});
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(2);
  CHECK(decision_assist_pairs(obs, mask, heads, 3).empty());

  // one "satellite" referenced by 4 arms across heads
  mask[0][2] = 0;
  mask[1] = {0, 0, 0, 1};
  const std::vector<Transition> pairs = decision_assist_pairs(obs, mask, heads, 3);
  CHECK(pairs.size() == 4);
  for (const Transition& p : pairs) {
    CHECK(p.assist);
    CHECK(p.reward == 0.0);
    CHECK(p.done);
    CHECK(p.assist_head >= 0);
    CHECK(!p.mask[static_cast<size_t>(p.assist_head)][static_cast<size_t>(p.assist_arm)]);
  }
}

TEST_CASE("assist pairs drive masked-arm Q values toward zero") {
  // Frozen toy batch, one 4-arm head. Arms 2 and 3 are unavailable; every
  // available arm appears in env rows with reward about 1.
  std::mt19937_64 rng(300);
  const HeadLayout heads = HeadLayout::make({4});
  DiscreteAgent agent = DiscreteAgent::make(3, heads, {16, 16}, 1e-2, rng, 1.0);

  DiscreteMask mask;
  mask.push_back({1, 1, 0, 0});
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Transition> rows;
  for (int s = 0; s < 4; ++s) {
    Eigen::VectorXd obs =
        Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return uni(rng); });
    for (int arm = 0; arm < 2; ++arm) {
      Transition t;
      t.obs = obs;
      t.next_obs = obs;
      t.arms = {arm};
      t.cont = Eigen::VectorXd::Zero(1);
      t.reward = 1.0 + 0.1 * uni(rng);
      t.done = true;
      t.mask = mask;
      rows.push_back(std::move(t));
    }
    for (Transition& p : decision_assist_pairs(obs, mask, heads, 1)) rows.push_back(std::move(p));
  }
  std::vector<const Transition*> ptrs;
  for (const Transition& t : rows) ptrs.push_back(&t);
  const Batch batch = make_batch(ptrs);

  for (int it = 0; it < 500; ++it) {
    const LossResult res = discrete_soft_q_loss(agent, batch, kDiscount);
    adam_step(agent.soft_q, agent.opt_q, res.grads);
  }

  double masked_mag = 0, avail_mag = 0;
  int masked_n = 0, avail_n = 0;
  for (const Transition& t : rows) {
    if (!t.assist && t.arms[0] != 0) continue;  // one Q row per state is enough
    const Eigen::VectorXd q = discrete_q_row(agent, t.obs);
    for (int arm = 0; arm < 4; ++arm) {
      if (mask[0][arm]) {
        avail_mag += std::abs(q[arm]);
        ++avail_n;
      } else {
        masked_mag += std::abs(q[arm]);
        ++masked_n;
      }
    }
  }
  masked_mag /= masked_n;
  avail_mag /= avail_n;
  CHECK(masked_mag < 0.05 * avail_mag);
}
