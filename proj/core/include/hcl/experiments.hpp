#pragma once

#include <string>
#include <vector>

#include "hcl/data.hpp"
#include "hcl/replay.hpp"
#include "hcl/trainer.hpp"

namespace hcl {

/// Two-moons contrast between functional regularization and generative
/// replay: train on the first moon, snapshot, fix four replay points drawn
/// once from the snapshot, then train on the second moon with the chosen
/// method restricted to those fixed points.
struct MoonsConfig {
  Method method = Method::FR;  // FR or GR
  std::uint64_t seed = 1;
  double alpha = 50.0;
  int steps_task1 = 1500;
  int steps_task2 = 1500;
  int n_per_moon = 500;
  double noise = 0.3;
  int batch_size = 32;
  int replay_points = 4;
  AdamConfig adam;
  FlowConfig flow;
  double mean_scale = 1.0;
  double min_separation = 1.0;

  MoonsConfig() {
    flow.dim = 2;
    flow.num_layers = 8;
    flow.hidden = {64, 64};
  }
};

struct MoonsResult {
  FlowModel snapshot_model;
  FlowModel final_model;
  TaskRegistry registry;
  std::vector<ReplayItem> replay;             // the fixed points
  std::vector<Eigen::VectorXd> latent_snap;   // f_snapshot(x_i)
  std::vector<Eigen::VectorXd> latent_final;  // f_final(x_i)
  double max_latent_displacement = 0.0;
  double heldout_ll_snapshot = 0.0;  // avg log-lik of task-1 test data
  double heldout_ll_final = 0.0;
  bool diverged = false;
};

MoonsResult run_moons_experiment(const MoonsConfig& cfg);

/// Density of p(x | y=0, t=0) on a uniform grid, for external plotting.
std::string density_grid_csv(const FlowModel& model,
                             const TaskRegistry& registry, double lo,
                             double hi, int grid);

}  // namespace hcl
