#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hcl {

/// Central finite differences, (f(x + h e_i) - f(x - h e_i)) / 2h.
/// Exact on polynomials of degree <= 2 up to rounding.
inline Eigen::VectorXd finite_diff_grad(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace hcl
