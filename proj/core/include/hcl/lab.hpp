#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hcl/flow.hpp"
#include "hcl/mixture.hpp"
#include "hcl/replay.hpp"

namespace hcl {

/// Scalar flow f(theta, x) = theta * x, theta > 0. Closed forms for the
/// one-dimensional replay/regularization losses.
struct ToyFlow {
  double theta = 1.0;
};

/// mean_z (theta/gamma * z - z)^2 = (theta/gamma - 1)^2 * mean(z^2).
/// Note this equals (theta - gamma)^2 * mean(z^2) only when gamma = 1.
double toy_fr_loss(double theta, double gamma, std::span<const double> zs);

/// mean_z [ 1/2 (theta/gamma * z)^2 - log(theta) ]. Diverges as theta -> 0+.
double toy_gr_loss(double theta, double gamma, std::span<const double> zs);

/// Gauss-Newton curvature of the flow map over a sample set:
/// G = (1/J) sum_j J_j^T J_j with J_j the D x P parameter Jacobian at x_j.
/// Symmetric PSD by construction.
Eigen::MatrixXd curvature_matrix(const FlowModel& model,
                                 std::span<const Eigen::VectorXd> xs);

/// Compares the true mean squared output change under a parameter
/// perturbation with the quadratic form delta^T G delta.
struct QuadraticCheck {
  double actual = 0.0;
  double predicted = 0.0;
};
QuadraticCheck quadratic_check(const FlowModel& model,
                               std::span<const Eigen::VectorXd> xs,
                               const Eigen::VectorXd& delta);

/// Per-sample comparison of the replay-loss excess and the functional
/// penalty at matched latent draws. Diagnostic only: the bound
/// gr_term <= fr_term is not pointwise valid.
struct BoundProbeRow {
  double gr_term = 0.0;  // ||f(x) - mu||^2 - ||z - mu||^2
  double fr_term = 0.0;  // ||f(x) - z||^2
};
std::vector<BoundProbeRow> bound_probe(const FlowModel& model,
                                       const Snapshot& snapshot,
                                       const TaskRegistry& registry,
                                       std::span<const Eigen::VectorXd> zs,
                                       int y, int t);

}  // namespace hcl
