#include "hcl/flow.hpp"

#include <cmath>
#include <stdexcept>

#include "hcl/rng.hpp"

namespace hcl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::domain_error(std::string(what) + ": non-finite input");
}
}  // namespace

FlowConfig FlowConfig::embedding_preset(int dim) {
  FlowConfig c;
  c.dim = dim;
  c.num_layers = 8;
  c.hidden = {512, 512, 512};
  return c;
}

CouplingLayer::CouplingLayer(const Eigen::ArrayXd& mask,
                             const std::vector<int>& hidden, double clamp)
    : mask_(mask), clamp_(clamp) {
  const int d = static_cast<int>(mask.size());
  const double on = mask.sum();
  if (on <= 0.0 || on >= static_cast<double>(d)) {
    throw std::invalid_argument("CouplingLayer: mask must be mixed");
  }
  std::vector<int> sizes;
  sizes.push_back(d);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(d);
  scale_net_ = Mlp(sizes);
  shift_net_ = Mlp(sizes);
}

void CouplingLayer::init_random(Rng& rng) {
  scale_net_.init_random(rng);
  shift_net_.init_random(rng);
  scale_net_.zero_final_layer();
  shift_net_.zero_final_layer();
}

Eigen::VectorXd CouplingLayer::forward(const Eigen::VectorXd& x,
                                       double& logdet) const {
  const Eigen::VectorXd xm = (mask_ * x.array()).matrix();
  const Eigen::ArrayXd s_eff = clamp_ * scale_net_.forward(xm).array().tanh();
  const Eigen::ArrayXd t = shift_net_.forward(xm).array();
  const Eigen::ArrayXd u = 1.0 - mask_;
  logdet += (u * s_eff).sum();
  return (mask_ * x.array() + u * (x.array() * s_eff.exp() + t)).matrix();
}

Eigen::VectorXd CouplingLayer::forward(const Eigen::VectorXd& x,
                                       double& logdet, Cache& cache) const {
  cache.x = x;
  const Eigen::VectorXd xm = (mask_ * x.array()).matrix();
  cache.s_raw = scale_net_.forward(xm, cache.s_cache);
  cache.s_eff = clamp_ * cache.s_raw.array().tanh();
  const Eigen::ArrayXd t = shift_net_.forward(xm, cache.t_cache).array();
  const Eigen::ArrayXd u = 1.0 - mask_;
  logdet += (u * cache.s_eff.array()).sum();
  return (mask_ * x.array() +
          u * (x.array() * cache.s_eff.array().exp() + t))
      .matrix();
}

Eigen::VectorXd CouplingLayer::inverse(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd zm = (mask_ * z.array()).matrix();
  const Eigen::ArrayXd s_eff = clamp_ * scale_net_.forward(zm).array().tanh();
  const Eigen::ArrayXd t = shift_net_.forward(zm).array();
  const Eigen::ArrayXd u = 1.0 - mask_;
  return (mask_ * z.array() + u * ((z.array() - t) * (-s_eff).exp())).matrix();
}

Eigen::VectorXd CouplingLayer::backward(const Cache& cache,
                                        const Eigen::VectorXd& dz,
                                        double dlogdet,
                                        double* param_grad) const {
  const Eigen::ArrayXd u = 1.0 - mask_;
  const Eigen::ArrayXd es = cache.s_eff.array().exp();

  // Direct paths.
  Eigen::ArrayXd dx = mask_ * dz.array() + u * dz.array() * es;
  const Eigen::VectorXd ds_eff =
      (u * (dz.array() * cache.x.array() * es + dlogdet)).matrix();
  const Eigen::VectorXd dt = (u * dz.array()).matrix();

  // Through the tanh clamp.
  const Eigen::ArrayXd th = cache.s_raw.array().tanh();
  const Eigen::VectorXd ds_raw =
      (ds_eff.array() * clamp_ * (1.0 - th * th)).matrix();

  // Through the nets; their input is the masked vector, so only masked
  // coordinates receive gradient.
  const Eigen::VectorXd dxm_s =
      scale_net_.backward(cache.s_cache, ds_raw, param_grad);
  const Eigen::VectorXd dxm_t = shift_net_.backward(
      cache.t_cache, dt, param_grad + scale_net_.num_params());
  dx += mask_ * (dxm_s.array() + dxm_t.array());
  return dx.matrix();
}

void CouplingLayer::get_params(double* out) const {
  scale_net_.get_params(out);
  shift_net_.get_params(out + scale_net_.num_params());
}

void CouplingLayer::set_params(const double* in) {
  scale_net_.set_params(in);
  shift_net_.set_params(in + scale_net_.num_params());
}

FlowModel FlowModel::create(const FlowConfig& cfg, Rng& rng) {
  if (cfg.dim < 2) throw std::invalid_argument("FlowModel: dim must be >= 2");
  FlowModel m;
  m.cfg_ = cfg;
  for (int l = 0; l < cfg.num_layers; ++l) {
    Eigen::ArrayXd mask(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) mask[i] = ((i + l) % 2 == 0) ? 1.0 : 0.0;
    m.layers_.emplace_back(mask, cfg.hidden, cfg.scale_clamp);
    m.layers_.back().init_random(rng);
    m.num_params_ += m.layers_.back().num_params();
  }
  return m;
}

FlowModel::ForwardResult FlowModel::forward(const Eigen::VectorXd& x) const {
  check_finite(x, "flow_forward");
  ForwardResult r{x, 0.0};
  for (const auto& layer : layers_) r.z = layer.forward(r.z, r.logdet);
  return r;
}

FlowModel::ForwardResult FlowModel::forward(const Eigen::VectorXd& x,
                                            Cache& cache) const {
  check_finite(x, "flow_forward");
  cache.layers.resize(layers_.size());
  ForwardResult r{x, 0.0};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    r.z = layers_[l].forward(r.z, r.logdet, cache.layers[l]);
  }
  return r;
}

Eigen::VectorXd FlowModel::inverse(const Eigen::VectorXd& z) const {
  check_finite(z, "flow_inverse");
  Eigen::VectorXd x = z;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    x = it->inverse(x);
  }
  return x;
}

double FlowModel::logprob(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& mean) const {
  check_finite(mean, "flow_logprob");
  const ForwardResult r = forward(x);
  const double sq = (r.z - mean).squaredNorm();
  return -0.5 * cfg_.dim * kLog2Pi - 0.5 * sq + r.logdet;
}

std::vector<Eigen::VectorXd> FlowModel::sample(Rng& rng,
                                               const Eigen::VectorXd& mean,
                                               int n) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(inverse(mean + rng.normal_vec(cfg_.dim)));
  }
  return out;
}

Eigen::VectorXd FlowModel::backward(const Cache& cache,
                                    const Eigen::VectorXd& dz, double dlogdet,
                                    double* param_grad) const {
  std::vector<std::size_t> offset(layers_.size());
  std::size_t acc = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = acc;
    acc += layers_[l].num_params();
  }
  Eigen::VectorXd d = dz;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    d = layers_[l].backward(cache.layers[l], d, dlogdet,
                            param_grad + offset[l]);
  }
  return d;
}

Eigen::MatrixXd FlowModel::jacobian_wrt_params(const Eigen::VectorXd& x) const {
  Cache cache;
  (void)forward(x, cache);
  Eigen::MatrixXd jac(cfg_.dim, num_params_);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(num_params_);
  for (int d = 0; d < cfg_.dim; ++d) {
    row.setZero();
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(cfg_.dim);
    dz[d] = 1.0;
    (void)backward(cache, dz, 0.0, row.data());
    jac.row(d) = row;
  }
  return jac;
}

Eigen::VectorXd FlowModel::get_params() const {
  Eigen::VectorXd theta(num_params_);
  double* p = theta.data();
  for (const auto& layer : layers_) {
    layer.get_params(p);
    p += layer.num_params();
  }
  return theta;
}

void FlowModel::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != num_params_) {
    throw std::invalid_argument("FlowModel::set_params: size mismatch");
  }
  const double* p = theta.data();
  for (auto& layer : layers_) {
    layer.set_params(p);
    p += layer.num_params();
  }
}

double loss_and_grad(const FlowModel& model, std::span<const LossTerm> terms,
                     Eigen::VectorXd& grad) {
  grad = Eigen::VectorXd::Zero(model.num_params());
  double loss = 0.0;
  FlowModel::Cache cache;
  for (const LossTerm& term : terms) {
    const auto r = model.forward(term.x, cache);
    Eigen::VectorXd dz;
    double dlogdet = 0.0;
    switch (term.kind) {
      case LossTerm::Kind::NegLogLik: {
        const Eigen::VectorXd diff = r.z - term.target;
        loss += term.weight * (0.5 * model.dim() * kLog2Pi +
                               0.5 * diff.squaredNorm() - r.logdet);
        dz = term.weight * diff;
        dlogdet = -term.weight;
        break;
      }
      case LossTerm::Kind::LatentMatch: {
        const Eigen::VectorXd diff = r.z - term.target;
        loss += term.weight * diff.squaredNorm();
        dz = 2.0 * term.weight * diff;
        dlogdet = 0.0;
        break;
      }
    }
    (void)model.backward(cache, dz, dlogdet, grad.data());
  }
  return loss;
}

}  // namespace hcl
