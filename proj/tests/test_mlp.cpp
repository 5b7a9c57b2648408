#include <doctest.h>

#include <random>

#include "sagmec/mlp.hpp"

using namespace sagmec;

TEST_CASE("forward matches a hand-rolled two-layer net") {
  std::mt19937_64 rng(1);
  Mlp net = Mlp::make({2, 3, 1}, rng);
  const Eigen::VectorXd p = net.params();

  Eigen::MatrixXd X(4, 2);
  X << 0.1, -0.2, 0.5, 0.7, -1.0, 0.3, 0.0, 0.0;
  const Eigen::MatrixXd Y = net.forward(X);

  // reconstruct from the flat parameter layout
  Eigen::MatrixXd W0 = Eigen::Map<const Eigen::MatrixXd>(p.data(), 2, 3);
  Eigen::VectorXd b0 = p.segment(6, 3);
  Eigen::MatrixXd W1 = Eigen::Map<const Eigen::MatrixXd>(p.data() + 9, 3, 1);
  Eigen::VectorXd b1 = p.segment(12, 1);
  const Eigen::MatrixXd H = ((X * W0).rowwise() + b0.transpose()).array().tanh();
  const Eigen::MatrixXd Y2 = (H * W1).rowwise() + b1.transpose();
  CHECK((Y - Y2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("params round trip and grads_like shapes") {
  std::mt19937_64 rng(2);
  Mlp net = Mlp::make({4, 8, 8, 3}, rng);
  const Eigen::VectorXd p = net.params();
  Mlp other = Mlp::make({4, 8, 8, 3}, rng);
  other.set_params(p);
  CHECK(other.params() == p);
  CHECK(net.n_params() == p.size());
  CHECK(Mlp::flatten(net.grads_like()).size() == p.size());
  CHECK_THROWS_AS(other.set_params(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences") {
  std::mt19937_64 rng(3);
  Mlp net = Mlp::make({3, 6, 5, 2}, rng);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(7, 3);
  Eigen::MatrixXd T = Eigen::MatrixXd::Random(7, 2);

  // scalar objective: 0.5 ||f(X) - T||^2
  auto loss = [&]() {
    const Eigen::MatrixXd Y = net.forward(X);
    return 0.5 * (Y - T).squaredNorm();
  };
  MlpWorkspace ws;
  const Eigen::MatrixXd Y = net.forward(X, &ws);
  const MlpGrads grads = net.backward(ws, Y - T);
  const Eigen::VectorXd ga = Mlp::flatten(grads);

  Eigen::VectorXd p = net.params();
  Eigen::VectorXd gf(p.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p[i] += h;
    net.set_params(p);
    const double up = loss();
    p[i] -= 2 * h;
    net.set_params(p);
    const double dn = loss();
    p[i] += h;
    net.set_params(p);
    gf[i] = (up - dn) / (2 * h);
  }
  CHECK((ga - gf).lpNorm<Eigen::Infinity>() / std::max(gf.lpNorm<Eigen::Infinity>(), 1e-9) < 1e-6);
}

TEST_CASE("input gradient flows through backward") {
  std::mt19937_64 rng(4);
  Mlp net = Mlp::make({3, 5, 1}, rng);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(2, 3);
  MlpWorkspace ws;
  net.forward(X, &ws);
  Eigen::MatrixXd dX;
  net.backward(ws, Eigen::MatrixXd::Ones(2, 1), &dX);
  REQUIRE(dX.rows() == 2);
  REQUIRE(dX.cols() == 3);

  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd Xp = X, Xm = X;
    Xp(0, j) += h;
    Xm(0, j) -= h;
    const double fd = (net.forward(Xp).sum() - net.forward(Xm).sum()) / (2 * h);
    CHECK(dX(0, j) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("adam minimizes a quadratic") {
  Adam opt;
  opt.lr = 0.1;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 5.0);
  for (int i = 0; i < 500; ++i) opt.step(x, 2.0 * x);
  CHECK(x.norm() < 1e-3);
}

TEST_CASE("soft updates converge to the frozen source") {
  std::mt19937_64 rng(5);
  Mlp source = Mlp::make({3, 4, 2}, rng);
  Mlp target = Mlp::make({3, 4, 2}, rng);
  for (int i = 0; i < 4000; ++i) soft_update(target, source, 5e-3);
  CHECK((target.params() - source.params()).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("construction validation") {
  std::mt19937_64 rng(6);
  CHECK_THROWS_AS(Mlp::make({3}, rng), std::invalid_argument);
  CHECK_THROWS_AS(Mlp::make({3, 0, 2}, rng), std::invalid_argument);
  Mlp net = Mlp::make({3, 4, 2}, rng);
  CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(1, 5)), std::invalid_argument);
}
