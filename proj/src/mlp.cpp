#include "sagmec/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace sagmec {

void MlpGrads::setZero() {
  for (auto& g : dW) g.setZero();
  for (auto& g : db) g.setZero();
}

void MlpGrads::axpy(double a, const MlpGrads& other) {
  for (size_t l = 0; l < dW.size(); ++l) {
    dW[l] += a * other.dW[l];
    db[l] += a * other.db[l];
  }
}

Mlp Mlp::make(const std::vector<int>& widths, std::mt19937_64& rng, double final_scale) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (int w : widths)
    if (w <= 0) throw std::invalid_argument("Mlp: widths must be positive");
  Mlp net;
  net.widths_ = widths;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Eigen::MatrixXd W(in, out);
    for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = uni(rng);
    if (l + 2 == widths.size()) W *= final_scale;
    net.W_.push_back(std::move(W));
    net.b_.push_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, MlpWorkspace* ws) const {
  if (X.cols() != input_dim()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  if (ws) {
    ws->activations.clear();
    ws->activations.push_back(X);
  }
  Eigen::MatrixXd h = X;
  for (size_t l = 0; l < W_.size(); ++l) {
    Eigen::MatrixXd z = (h * W_[l]).rowwise() + b_[l].transpose();
    if (l + 1 < W_.size()) z = z.array().tanh();
    h = std::move(z);
    if (ws) ws->activations.push_back(h);
  }
  return h;
}

MlpGrads Mlp::backward(const MlpWorkspace& ws, const Eigen::MatrixXd& dY, Eigen::MatrixXd* dX) const {
  MlpGrads grads = grads_like();
  Eigen::MatrixXd delta = dY;
  for (int l = static_cast<int>(W_.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = ws.activations[static_cast<size_t>(l)];
    grads.dW[l] = input.transpose() * delta;
    grads.db[l] = delta.colwise().sum();
    if (l > 0 || dX) {
      Eigen::MatrixXd d_in = delta * W_[l].transpose();
      if (l > 0) {
        // tanh'(z) = 1 - tanh(z)^2, and activations[l] stores tanh(z)
        d_in.array() *= (1.0 - ws.activations[static_cast<size_t>(l)].array().square());
        delta = std::move(d_in);
      } else if (dX) {
        *dX = std::move(d_in);
      }
    }
  }
  return grads;
}

Eigen::Index Mlp::n_params() const {
  Eigen::Index n = 0;
  for (size_t l = 0; l < W_.size(); ++l) n += W_[l].size() + b_[l].size();
  return n;
}

Eigen::VectorXd Mlp::params() const {
  Eigen::VectorXd flat(n_params());
  Eigen::Index at = 0;
  for (size_t l = 0; l < W_.size(); ++l) {
    flat.segment(at, W_[l].size()) = Eigen::Map<const Eigen::VectorXd>(W_[l].data(), W_[l].size());
    at += W_[l].size();
    flat.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return flat;
}

void Mlp::set_params(const Eigen::VectorXd& flat) {
  if (flat.size() != n_params()) throw std::invalid_argument("Mlp::set_params: size mismatch");
  Eigen::Index at = 0;
  for (size_t l = 0; l < W_.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(W_[l].data(), W_[l].size()) = flat.segment(at, W_[l].size());
    at += W_[l].size();
    b_[l] = flat.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

Eigen::VectorXd Mlp::flatten(const MlpGrads& grads) {
  Eigen::Index n = 0;
  for (size_t l = 0; l < grads.dW.size(); ++l) n += grads.dW[l].size() + grads.db[l].size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (size_t l = 0; l < grads.dW.size(); ++l) {
    flat.segment(at, grads.dW[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(grads.dW[l].data(), grads.dW[l].size());
    at += grads.dW[l].size();
    flat.segment(at, grads.db[l].size()) = grads.db[l];
    at += grads.db[l].size();
  }
  return flat;
}

MlpGrads Mlp::grads_like() const {
  MlpGrads g;
  for (size_t l = 0; l < W_.size(); ++l) {
    g.dW.emplace_back(Eigen::MatrixXd::Zero(W_[l].rows(), W_[l].cols()));
    g.db.emplace_back(Eigen::VectorXd::Zero(b_[l].size()));
  }
  return g;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1 - beta1) * grad;
  v = beta2 * v + (1 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1 - std::pow(beta2, static_cast<double>(t));
  params.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

void adam_step(Mlp& net, Adam& opt, const MlpGrads& grads) {
  Eigen::VectorXd p = net.params();
  opt.step(p, Mlp::flatten(grads));
  net.set_params(p);
}

void soft_update(Mlp& target, const Mlp& source, double rate) {
  Eigen::VectorXd p = target.params();
  p = (1 - rate) * p + rate * source.params();
  target.set_params(p);
}

}  // namespace sagmec
