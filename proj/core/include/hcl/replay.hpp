#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hcl/flow.hpp"
#include "hcl/mixture.hpp"

namespace hcl {

class Rng;

/// Frozen copy of the model taken at the last detected task change. At
/// most one snapshot exists at a time; the trainer replaces it on every
/// subsequent change.
struct Snapshot {
  FlowModel model;
  TaskRegistry registry;
  std::vector<int> covered;  // tasks observed before the change
  long batch_index = 0;
};

struct ReplayItem {
  Eigen::VectorXd x;
  int y = 0;
  int t = 0;
};

/// Deep frozen copies. Throws std::invalid_argument on an empty covered set.
Snapshot take_snapshot(const FlowModel& model, const TaskRegistry& registry,
                       std::vector<int> covered, long batch_index = 0);

/// n_per_task samples for each covered task: y uniform over classes,
/// x = snapshot-inverse of a N(mu_{y,t}, I) draw.
std::vector<ReplayItem> draw_replay(const Snapshot& snapshot, Rng& rng,
                                    int n_per_task);

/// Mean negative log-likelihood of the replay batch under the live model
/// (minimization form of the generative-replay objective).
double gr_loss(const FlowModel& model, const TaskRegistry& registry,
               std::span<const ReplayItem> replay);

/// Mean squared latent displacement between live and snapshot flows on the
/// replay points; labels unused.
double fr_loss(const FlowModel& model, const Snapshot& snapshot,
               std::span<const ReplayItem> replay);

/// Loss-term builders for the trainer (same objectives, gradient-ready).
/// Each term carries weight = extra_weight / replay.size().
void append_gr_terms(const FlowModel& model, const TaskRegistry& registry,
                     std::span<const ReplayItem> replay,
                     std::vector<LossTerm>& terms, double extra_weight = 1.0);
void append_fr_terms(const Snapshot& snapshot,
                     std::span<const ReplayItem> replay,
                     std::vector<LossTerm>& terms, double alpha = 1.0);

}  // namespace hcl
