#pragma once

#include <Eigen/Dense>
#include <utility>

namespace hcl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 term added to the gradient before the moment updates (coupled decay).
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig cfg;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  static AdamState create(int n, const AdamConfig& cfg = {});
};

/// Bias-corrected Adam update. Pure: returns the new (params, state).
/// Throws std::invalid_argument on length mismatch.
std::pair<Eigen::VectorXd, AdamState> adam_step(const Eigen::VectorXd& params,
                                                const Eigen::VectorXd& grads,
                                                const AdamState& state);

/// In-place variant used by the training loop.
void adam_step_inplace(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                       AdamState& state);

}  // namespace hcl
