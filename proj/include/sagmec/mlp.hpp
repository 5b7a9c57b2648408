#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace sagmec {

/// Gradients with the same shape as the network parameters.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  void setZero();
  void axpy(double a, const MlpGrads& other);  // this += a * other
};

/// Cached per-layer activations from one forward pass (rows are samples).
struct MlpWorkspace {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] = input, back() = output
};

/// Fully connected net, tanh on hidden layers, linear output. Weights are
/// stored input-major (in x out) so a batch forward is a plain product.
class Mlp {
 public:
  Mlp() = default;
  static Mlp make(const std::vector<int>& widths, std::mt19937_64& rng, double final_scale = 1.0);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, MlpWorkspace* ws = nullptr) const;

  /// Backprop of dY (same shape as the output) through the cached pass.
  /// Optionally also returns the gradient with respect to the input.
  MlpGrads backward(const MlpWorkspace& ws, const Eigen::MatrixXd& dY,
                    Eigen::MatrixXd* dX = nullptr) const;

  int input_dim() const { return W_.empty() ? 0 : static_cast<int>(W_.front().rows()); }
  int output_dim() const { return W_.empty() ? 0 : static_cast<int>(W_.back().cols()); }
  int n_layers() const { return static_cast<int>(W_.size()); }
  const std::vector<int>& widths() const { return widths_; }

  Eigen::Index n_params() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& flat);
  static Eigen::VectorXd flatten(const MlpGrads& grads);
  MlpGrads grads_like() const;

 private:
  std::vector<int> widths_;
  std::vector<Eigen::MatrixXd> W_;  // in x out
  std::vector<Eigen::VectorXd> b_;  // out
};

/// Adaptive-moment optimizer over one flat parameter vector.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  Eigen::VectorXd m, v;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

/// One Adam step applied directly to a network.
void adam_step(Mlp& net, Adam& opt, const MlpGrads& grads);

/// Polyak averaging: target <- (1 - rate) * target + rate * source.
void soft_update(Mlp& target, const Mlp& source, double rate);

}  // namespace sagmec
