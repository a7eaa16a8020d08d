#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hcl/mlp.hpp"

namespace hcl {

class Rng;

struct FlowConfig {
  int dim = 2;
  int num_layers = 8;
  std::vector<int> hidden = {64, 64};
  double scale_clamp = 2.0;  // effective log-scale = clamp * tanh(raw)

  /// Preset sized for high-dimensional embedding data.
  static FlowConfig embedding_preset(int dim);
};

/// One affine coupling layer. Masked coordinates pass through unchanged and
/// feed the scale/shift nets that transform the complementary coordinates:
///   z = b.*x + (1-b).*(x .* exp(s~(b.*x)) + t(b.*x)),
/// with s~ = clamp * tanh(raw scale output). The Jacobian is triangular, so
/// log|det| is the sum of s~ over unmasked coordinates.
class CouplingLayer {
 public:
  CouplingLayer() = default;
  CouplingLayer(const Eigen::ArrayXd& mask, const std::vector<int>& hidden,
                double clamp);

  struct Cache {
    Eigen::VectorXd x;
    Eigen::VectorXd s_raw;
    Eigen::VectorXd s_eff;  // clamped log-scale
    Mlp::Cache s_cache;
    Mlp::Cache t_cache;
  };

  Eigen::VectorXd forward(const Eigen::VectorXd& x, double& logdet) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x, double& logdet,
                          Cache& cache) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& z) const;

  /// VJP: given dL/dz and dL/dlogdet, accumulates dL/dparams into
  /// param_grad (scale net first, shift net second) and returns dL/dx.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::VectorXd& dz,
                           double dlogdet, double* param_grad) const;

  int num_params() const { return scale_net_.num_params() + shift_net_.num_params(); }
  void get_params(double* out) const;
  void set_params(const double* in);
  void init_random(Rng& rng);

  const Eigen::ArrayXd& mask() const { return mask_; }
  double clamp() const { return clamp_; }

 private:
  Eigen::ArrayXd mask_;  // 1 = pass-through, 0 = transformed
  Mlp scale_net_;
  Mlp shift_net_;
  double clamp_ = 2.0;
};

/// RealNVP-style stack of affine coupling layers with alternating even/odd
/// masks. Immutable during evaluation; the trainer owns the only mutable
/// parameter vector via set_params.
class FlowModel {
 public:
  FlowModel() = default;

  /// Random hidden layers, zero-initialized final layers: the flow starts
  /// as the identity map.
  static FlowModel create(const FlowConfig& cfg, Rng& rng);

  struct ForwardResult {
    Eigen::VectorXd z;
    double logdet = 0.0;
  };
  struct Cache {
    std::vector<CouplingLayer::Cache> layers;
  };

  ForwardResult forward(const Eigen::VectorXd& x) const;
  ForwardResult forward(const Eigen::VectorXd& x, Cache& cache) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& z) const;

  /// log p(x) under latent N(mean, I) pushed through the inverse flow.
  double logprob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean) const;

  std::vector<Eigen::VectorXd> sample(Rng& rng, const Eigen::VectorXd& mean,
                                      int n) const;

  /// VJP through the whole stack; accumulates into param_grad (layer 0
  /// first) and returns dL/dx.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::VectorXd& dz,
                           double dlogdet, double* param_grad) const;

  /// D x P matrix; row d = gradient of z_d with respect to the parameters.
  Eigen::MatrixXd jacobian_wrt_params(const Eigen::VectorXd& x) const;

  int dim() const { return cfg_.dim; }
  int num_params() const { return num_params_; }
  Eigen::VectorXd get_params() const;
  void set_params(const Eigen::VectorXd& theta);
  const FlowConfig& config() const { return cfg_; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  std::vector<CouplingLayer>& layers() { return layers_; }

 private:
  FlowConfig cfg_;
  std::vector<CouplingLayer> layers_;
  int num_params_ = 0;
};

/// One term of a training objective; the objective is
/// sum_i weight_i * term_i.
///   NegLogLik:   -logprob(x, target)
///   LatentMatch: ||f(x) - target||^2
struct LossTerm {
  enum class Kind { NegLogLik, LatentMatch };
  Kind kind;
  Eigen::VectorXd x;
  Eigen::VectorXd target;
  double weight = 1.0;
};

/// Reverse-mode gradient of the summed objective with respect to theta.
/// Terms are processed in order; summation order is fixed for
/// reproducibility.
double loss_and_grad(const FlowModel& model, std::span<const LossTerm> terms,
                     Eigen::VectorXd& grad);

}  // namespace hcl
