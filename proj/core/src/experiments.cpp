#include "hcl/experiments.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hcl/rng.hpp"

namespace hcl {

namespace {

// One Adam pass over `steps` minibatches drawn uniformly from `data`.
// `extra` appends the method-specific terms for the current step.
template <typename ExtraFn>
bool train_phase(FlowModel& model, AdamState& adam, Eigen::VectorXd& theta,
                 const std::vector<Sample>& data, const Eigen::VectorXd& mean,
                 int steps, int batch_size, Rng& rng, ExtraFn extra) {
  const int n = static_cast<int>(data.size());
  Eigen::VectorXd grad(model.num_params());
  std::vector<LossTerm> terms;
  for (int s = 0; s < steps; ++s) {
    terms.clear();
    for (int b = 0; b < batch_size; ++b) {
      const Sample& smp = data[rng.uniform_int(n)];
      terms.push_back({LossTerm::Kind::NegLogLik, smp.x, mean,
                       1.0 / batch_size});
    }
    extra(terms);
    const double loss = loss_and_grad(model, terms, grad);
    if (!std::isfinite(loss) || !grad.allFinite()) return false;
    adam_step_inplace(theta, grad, adam);
    model.set_params(theta);
  }
  return true;
}

double avg_loglik(const FlowModel& model, const std::vector<Sample>& data,
                  const Eigen::VectorXd& mean) {
  double sum = 0.0;
  for (const Sample& s : data) sum += model.logprob(s.x, mean);
  return sum / static_cast<double>(data.size());
}

}  // namespace

MoonsResult run_moons_experiment(const MoonsConfig& cfg) {
  if (cfg.flow.dim != 2) throw std::invalid_argument("moons experiment is 2-D");
  if (cfg.method != Method::FR && cfg.method != Method::GR)
    throw std::invalid_argument("moons experiment supports only FR and GR");

  Rng rng_data(cfg.seed, streams::kData);
  Rng rng_means(cfg.seed, streams::kMeans);
  Rng rng_replay(cfg.seed, streams::kReplay);
  Rng rng_batch(cfg.seed, streams::kShuffle);
  Rng rng_init(cfg.seed, streams::kInit);

  auto moons = gen_two_moons(cfg.n_per_moon, cfg.noise, rng_data);

  RegistryConfig rc;
  rc.classes_per_task = 1;
  rc.dim = 2;
  rc.mean_scale = cfg.mean_scale;
  rc.min_separation = cfg.min_separation;
  TaskRegistry registry(rc);
  registry.spawn_task(rng_means);

  MoonsResult res;
  FlowModel model = FlowModel::create(cfg.flow, rng_init);
  Eigen::VectorXd theta = model.get_params();
  AdamState adam = AdamState::create(model.num_params(), cfg.adam);

  if (!train_phase(model, adam, theta, moons[0].train, registry.mean(0, 0),
                   cfg.steps_task1, cfg.batch_size, rng_batch,
                   [](std::vector<LossTerm>&) {})) {
    res.diverged = true;
    return res;
  }

  Snapshot snap = take_snapshot(model, registry, {0});
  registry.spawn_task(rng_means);
  // A fixed handful of first-task data points serves as the replay set.
  for (int i = 0; i < cfg.replay_points; ++i) {
    const int pick = rng_replay.uniform_int(static_cast<int>(moons[0].train.size()));
    res.replay.push_back({moons[0].train[pick].x, 0, 0});
  }
  for (const ReplayItem& item : res.replay)
    res.latent_snap.push_back(snap.model.forward(item.x).z);

  // Fresh optimizer state for the second phase, as after a detected switch.
  adam = AdamState::create(model.num_params(), cfg.adam);
  auto extra = [&](std::vector<LossTerm>& terms) {
    if (cfg.method == Method::FR)
      append_fr_terms(snap, res.replay, terms, cfg.alpha);
    else
      append_gr_terms(model, registry, res.replay, terms, cfg.alpha);
  };
  if (!train_phase(model, adam, theta, moons[1].train, registry.mean(0, 1),
                   cfg.steps_task2, cfg.batch_size, rng_batch, extra)) {
    res.diverged = true;
    return res;
  }

  for (const ReplayItem& item : res.replay)
    res.latent_final.push_back(model.forward(item.x).z);
  for (size_t i = 0; i < res.replay.size(); ++i) {
    const double d = (res.latent_final[i] - res.latent_snap[i]).norm();
    res.max_latent_displacement = std::max(res.max_latent_displacement, d);
  }
  res.heldout_ll_snapshot =
      avg_loglik(snap.model, moons[0].test, registry.mean(0, 0));
  res.heldout_ll_final = avg_loglik(model, moons[0].test, registry.mean(0, 0));

  res.snapshot_model = snap.model;
  res.final_model = model;
  res.registry = registry;
  return res;
}

std::string density_grid_csv(const FlowModel& model,
                             const TaskRegistry& registry, double lo,
                             double hi, int grid) {
  std::ostringstream out;
  out.precision(10);
  out << "x0,x1,density\n";
  const double step = (hi - lo) / (grid - 1);
  Eigen::VectorXd x(2);
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      x << lo + i * step, lo + j * step;
      out << x[0] << ',' << x[1] << ','
          << std::exp(model.logprob(x, registry.mean(0, 0))) << '\n';
    }
  }
  return out.str();
}

}  // namespace hcl
