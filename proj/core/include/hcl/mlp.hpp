#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hcl {

class Rng;

/// Fully-connected network with tanh hidden units and a linear output.
/// Parameters are exposed as one flat slice so the owner can concatenate
/// several nets into a single optimizer vector.
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}; at least {in, out}.
  explicit Mlp(std::vector<int> sizes);

  void init_random(Rng& rng);

  /// Zeroes the last layer's weights and bias so the net outputs 0.
  void zero_final_layer();

  int num_params() const { return num_params_; }
  void get_params(double* out) const;
  void set_params(const double* in);

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  struct Cache {
    Eigen::VectorXd input;
    std::vector<Eigen::VectorXd> hidden;  // post-activation per hidden layer
  };
  Eigen::VectorXd forward(const Eigen::VectorXd& x, Cache& cache) const;

  /// Accumulates dL/dparams into param_grad (flat, same layout as
  /// get_params) and returns dL/dinput.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::VectorXd& dout,
                           double* param_grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;  // [l]: out x in
  std::vector<Eigen::VectorXd> biases_;
  int num_params_ = 0;
};

}  // namespace hcl
