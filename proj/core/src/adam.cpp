#include "hcl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace hcl {

AdamState AdamState::create(int n, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  s.step = 0;
  return s;
}

void adam_step_inplace(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                       AdamState& state) {
  const auto n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  const AdamConfig& c = state.cfg;
  state.step += 1;
  Eigen::VectorXd g = grads;
  if (c.weight_decay != 0.0) g += c.weight_decay * params;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * g;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const Eigen::VectorXd mhat = state.m / bc1;
  const Eigen::VectorXd vhat = state.v / bc2;
  params -= c.lr * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                      Eigen::VectorXd::Constant(n, c.eps));
}

std::pair<Eigen::VectorXd, AdamState> adam_step(const Eigen::VectorXd& params,
                                                const Eigen::VectorXd& grads,
                                                const AdamState& state) {
  Eigen::VectorXd p = params;
  AdamState s = state;
  adam_step_inplace(p, grads, s);
  return {std::move(p), std::move(s)};
}

}  // namespace hcl
