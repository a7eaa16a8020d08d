#include "hcl/replay.hpp"

#include <stdexcept>

#include "hcl/rng.hpp"

namespace hcl {

Snapshot take_snapshot(const FlowModel& model, const TaskRegistry& registry,
                       std::vector<int> covered, long batch_index) {
  if (covered.empty()) {
    throw std::invalid_argument("take_snapshot: empty covered set");
  }
  return Snapshot{model, registry, std::move(covered), batch_index};
}

std::vector<ReplayItem> draw_replay(const Snapshot& snapshot, Rng& rng,
                                    int n_per_task) {
  if (n_per_task < 1) {
    throw std::invalid_argument("draw_replay: n_per_task < 1");
  }
  std::vector<ReplayItem> out;
  out.reserve(snapshot.covered.size() * n_per_task);
  const int K = snapshot.registry.num_classes();
  for (int t : snapshot.covered) {
    for (int i = 0; i < n_per_task; ++i) {
      const int y = rng.uniform_int(K);
      const Eigen::VectorXd z =
          snapshot.registry.mean(y, t) + rng.normal_vec(snapshot.model.dim());
      out.push_back({snapshot.model.inverse(z), y, t});
    }
  }
  return out;
}

double gr_loss(const FlowModel& model, const TaskRegistry& registry,
               std::span<const ReplayItem> replay) {
  if (replay.empty()) throw std::invalid_argument("gr_loss: empty batch");
  double s = 0.0;
  for (const ReplayItem& r : replay) {
    s -= model.logprob(r.x, registry.mean(r.y, r.t));
  }
  return s / static_cast<double>(replay.size());
}

double fr_loss(const FlowModel& model, const Snapshot& snapshot,
               std::span<const ReplayItem> replay) {
  if (replay.empty()) throw std::invalid_argument("fr_loss: empty batch");
  double s = 0.0;
  for (const ReplayItem& r : replay) {
    s += (model.forward(r.x).z - snapshot.model.forward(r.x).z).squaredNorm();
  }
  return s / static_cast<double>(replay.size());
}

void append_gr_terms(const FlowModel& /*model*/, const TaskRegistry& registry,
                     std::span<const ReplayItem> replay,
                     std::vector<LossTerm>& terms, double extra_weight) {
  const double w = extra_weight / static_cast<double>(replay.size());
  for (const ReplayItem& r : replay) {
    terms.push_back(
        {LossTerm::Kind::NegLogLik, r.x, registry.mean(r.y, r.t), w});
  }
}

void append_fr_terms(const Snapshot& snapshot,
                     std::span<const ReplayItem> replay,
                     std::vector<LossTerm>& terms, double alpha) {
  const double w = alpha / static_cast<double>(replay.size());
  for (const ReplayItem& r : replay) {
    terms.push_back({LossTerm::Kind::LatentMatch, r.x,
                     snapshot.model.forward(r.x).z, w});
  }
}

}  // namespace hcl
