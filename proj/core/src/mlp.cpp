#include "hcl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "hcl/rng.hpp"

namespace hcl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need >= 2 sizes");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.emplace_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    biases_.emplace_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
    num_params_ += sizes_[l + 1] * (sizes_[l] + 1);
  }
}

void Mlp::init_random(Rng& rng) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    for (Eigen::Index i = 0; i < weights_[l].size(); ++i) {
      weights_[l].data()[i] = scale * rng.normal();
    }
    biases_[l].setZero();
  }
}

void Mlp::zero_final_layer() {
  weights_.back().setZero();
  biases_.back().setZero();
}

void Mlp::get_params(double* out) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy(weights_[l].data(), weights_[l].data() + weights_[l].size(), out);
    out += weights_[l].size();
    std::copy(biases_[l].data(), biases_[l].data() + biases_[l].size(), out);
    out += biases_[l].size();
  }
}

void Mlp::set_params(const double* in) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy(in, in + weights_[l].size(), weights_[l].data());
    in += weights_[l].size();
    std::copy(in, in + biases_[l].size(), biases_[l].data());
    in += biases_[l].size();
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
    h = (weights_[l] * h + biases_[l]).array().tanh();
  }
  return weights_.back() * h + biases_.back();
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x, Cache& cache) const {
  cache.input = x;
  cache.hidden.clear();
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
    h = (weights_[l] * h + biases_[l]).array().tanh();
    cache.hidden.push_back(h);
  }
  return weights_.back() * h + biases_.back();
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::VectorXd& dout,
                              double* param_grad) const {
  const std::size_t L = weights_.size();
  // Flat offsets per layer, same layout as get_params.
  std::vector<std::size_t> offset(L);
  std::size_t acc = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offset[l] = acc;
    acc += weights_[l].size() + biases_[l].size();
  }

  Eigen::VectorXd delta = dout;
  for (std::size_t li = L; li-- > 0;) {
    const Eigen::VectorXd& in =
        (li == 0) ? cache.input : cache.hidden[li - 1];
    Eigen::Map<Eigen::MatrixXd> dW(param_grad + offset[li],
                                   weights_[li].rows(), weights_[li].cols());
    Eigen::Map<Eigen::VectorXd> db(
        param_grad + offset[li] + weights_[li].size(), biases_[li].size());
    dW.noalias() += delta * in.transpose();
    db += delta;
    if (li == 0) {
      return weights_[0].transpose() * delta;
    }
    // Through the tanh of layer li-1.
    Eigen::VectorXd dh = weights_[li].transpose() * delta;
    const Eigen::VectorXd& h = cache.hidden[li - 1];
    delta = dh.cwiseProduct(
        (Eigen::VectorXd::Ones(h.size()) - h.cwiseProduct(h)));
  }
  return Eigen::VectorXd();  // unreachable
}

}  // namespace hcl
