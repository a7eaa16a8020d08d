#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcl/adam.hpp"
#include "hcl/data.hpp"
#include "hcl/detector.hpp"
#include "hcl/flow.hpp"
#include "hcl/metrics.hpp"
#include "hcl/mixture.hpp"
#include "hcl/replay.hpp"
#include "hcl/rng.hpp"

namespace hcl {

enum class Mode { TaskAware, TaskAgnostic };
enum class Method { None, GR, FR, ER, MTL };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct TrainerConfig {
  Mode mode = Mode::TaskAware;
  Method method = Method::None;
  /// Task-agnostic only: replace the typicality detector with ground-truth
  /// boundaries (used to validate that the agnostic machinery matches the
  /// task-aware path).
  bool oracle_detector = false;
  double alpha = 1.0;  // FR weight
  int epochs_per_task = 3;
  int batch_size = 32;
  AdamConfig adam;
  int er_capacity = 1000;  // per past task
  DetectorConfig detector;
  FlowConfig flow;
  RegistryConfig registry;
};

struct StepRecord {
  long step = 0;
  int segment = 0;
  int task = 0;
  double nll = 0.0;
  double extra = 0.0;  // replay / regularization / buffer portion
  double total = 0.0;
};

struct TrainEvent {
  long batch_index = 0;
  int segment = 0;
  std::string kind;  // "new_task" | "switch"
  int from_task = -1;
  int to_task = -1;
};

struct TrainResult {
  FlowModel model;
  TaskRegistry registry;
  AccuracyMatrix acc;
  std::vector<StepRecord> steps;
  std::vector<TrainEvent> events;
  std::vector<DetectorRecord> detector_log;
  std::map<int, int> relabel;  // registry task id -> ground-truth label
  std::optional<Snapshot> snapshot;
  bool diverged = false;
  std::string abort_message;
};

/// Sequential trainer over a task stream. Owns the only mutable parameter
/// vector; all batch and replay summation is fixed-order, so a given
/// (config, seed) is bit-reproducible.
class ContinualTrainer {
 public:
  ContinualTrainer(const TrainerConfig& cfg, std::uint64_t seed);

  TrainResult run(const std::vector<TaskDataset>& tasks,
                  const SequenceSpec& seq);

  /// One optimizer step on a labeled batch for the current task. Exposed
  /// for unit tests; run() drives it.
  struct StepLoss {
    double nll = 0.0;
    double extra = 0.0;
    double total = 0.0;
  };
  StepLoss train_step(std::span<const Sample> batch);

  int spawn_first_task();
  const FlowModel& model() const { return model_; }
  const TaskRegistry& registry() const { return registry_; }
  int current_task() const { return current_; }
  const std::optional<Snapshot>& snapshot() const { return snapshot_; }

 private:
  void do_new_task(int gt_label, long batch_index, int segment,
                   std::vector<TrainEvent>& events);
  void do_switch(int target, long batch_index, int segment,
                 std::vector<TrainEvent>& events);
  void evaluate(const std::vector<TaskDataset>& tasks,
                const std::vector<int>& seen_labels, int segment,
                AccuracyMatrix& acc) const;

  TrainerConfig cfg_;
  Rng rng_means_;
  Rng rng_replay_;
  Rng rng_shuffle_;
  Rng rng_init_;
  Rng rng_buffer_;

  FlowModel model_;
  TaskRegistry registry_;
  AdamState adam_;
  Eigen::VectorXd theta_;
  Detector detector_;
  std::optional<Snapshot> snapshot_;
  int current_ = -1;

  std::map<int, int> relabel_;        // registry id -> ground-truth label
  std::map<int, int> gt_to_registry_; // first registry id per ground truth
  // ER reservoirs keyed by registry id.
  std::map<int, std::vector<Sample>> er_buffers_;
  std::map<int, long> er_seen_;
  // MTL needs the raw past datasets during run().
  const std::vector<TaskDataset>* stream_tasks_ = nullptr;
  std::vector<int> seen_labels_;
  bool diverged_ = false;
};

}  // namespace hcl
