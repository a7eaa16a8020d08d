#include "hcl/lab.hpp"

#include <cmath>
#include <stdexcept>

namespace hcl {

namespace {
void check_positive(double theta, double gamma) {
  if (theta <= 0.0 || gamma <= 0.0) {
    throw std::domain_error("toy flow: theta and gamma must be positive");
  }
}
}  // namespace

double toy_fr_loss(double theta, double gamma, std::span<const double> zs) {
  check_positive(theta, gamma);
  const double r = theta / gamma - 1.0;
  double s = 0.0;
  for (double z : zs) s += (r * z) * (r * z);
  return s / static_cast<double>(zs.size());
}

double toy_gr_loss(double theta, double gamma, std::span<const double> zs) {
  check_positive(theta, gamma);
  const double r = theta / gamma;
  double s = 0.0;
  for (double z : zs) s += 0.5 * (r * z) * (r * z) - std::log(theta);
  return s / static_cast<double>(zs.size());
}

Eigen::MatrixXd curvature_matrix(const FlowModel& model,
                                 std::span<const Eigen::VectorXd> xs) {
  if (xs.empty()) throw std::invalid_argument("curvature_matrix: empty xs");
  const int P = model.num_params();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(P, P);
  for (const auto& x : xs) {
    const Eigen::MatrixXd jac = model.jacobian_wrt_params(x);
    G.noalias() += jac.transpose() * jac;
  }
  G /= static_cast<double>(xs.size());
  // Symmetrize away accumulation round-off.
  G = 0.5 * (G + G.transpose()).eval();
  return G;
}

QuadraticCheck quadratic_check(const FlowModel& model,
                               std::span<const Eigen::VectorXd> xs,
                               const Eigen::VectorXd& delta) {
  QuadraticCheck out;
  const Eigen::MatrixXd G = curvature_matrix(model, xs);
  out.predicted = delta.dot(G * delta);

  FlowModel perturbed = model;
  perturbed.set_params(model.get_params() + delta);
  double s = 0.0;
  for (const auto& x : xs) {
    s += (perturbed.forward(x).z - model.forward(x).z).squaredNorm();
  }
  out.actual = s / static_cast<double>(xs.size());
  return out;
}

std::vector<BoundProbeRow> bound_probe(const FlowModel& model,
                                       const Snapshot& snapshot,
                                       const TaskRegistry& registry,
                                       std::span<const Eigen::VectorXd> zs,
                                       int y, int t) {
  const Eigen::VectorXd& mu = registry.mean(y, t);
  (void)snapshot.registry.mean(y, t);  // validate against both registries
  std::vector<BoundProbeRow> rows;
  rows.reserve(zs.size());
  for (const auto& z : zs) {
    const Eigen::VectorXd x = snapshot.model.inverse(z);
    const Eigen::VectorXd fz = model.forward(x).z;
    rows.push_back({(fz - mu).squaredNorm() - (z - mu).squaredNorm(),
                    (fz - z).squaredNorm()});
  }
  return rows;
}

}  // namespace hcl
