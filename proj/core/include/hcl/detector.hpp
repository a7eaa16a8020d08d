#pragma once

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcl/data.hpp"
#include "hcl/flow.hpp"
#include "hcl/mixture.hpp"

namespace hcl {

/// Per-batch typicality statistics on a task:
///   s1 = sum_j log p(x_j | y_j, t)       (data log-likelihood)
///   s2 = sum_j log p_Z(f(x_j) | y_j, t)  (latent log-likelihood)
///   s3 = s1 - s2                         (summed log-determinant)
struct BatchStats {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  double get(int i) const { return i == 0 ? s1 : (i == 1 ? s2 : s3); }
};

BatchStats batch_stats(const FlowModel& model, const TaskRegistry& registry,
                       std::span<const Sample> batch, int t);

/// Ring buffer of the last `window` values of each statistic, with running
/// mean and a floored standard deviation.
class StatWindow {
 public:
  explicit StatWindow(int window = 100) : window_(window) {}
  void push(const BatchStats& s);
  int size() const { return static_cast<int>(buf_[0].size()); }
  double mean(int stat) const;
  /// max(sample std, 1e-6 |mean| + 1e-12).
  double stddev(int stat) const;

 private:
  int window_;
  std::array<std::deque<double>, 3> buf_;
};

struct DetectorConfig {
  double lambda = 5.0;
  int window = 100;
  int warmup = 20;    // minimum live-window fill before testing
  int cooldown = 20;  // batches after a switch with testing suspended
  std::array<bool, 3> enabled = {true, false, false};  // S1 / S2 / S3
};

struct Decision {
  enum class Kind { Stay, Switch, NewTask };
  Kind kind = Kind::Stay;
  int task = -1;  // target task for Switch
};

struct DetectorRecord {
  long batch_index = 0;
  int task = -1;
  BatchStats stats;
  double win_mean = 0.0, win_std = 0.0;  // live window, first enabled stat
  std::string decision;
};

/// Typicality-test task detector. Keeps one live window for the current
/// task and frozen windows for inactive tasks (captured when each task was
/// last active; a matched task's window is resumed on switch-back).
class Detector {
 public:
  explicit Detector(const DetectorConfig& cfg) : cfg_(cfg) {}

  /// Starts tracking a task: resumes its frozen window if one exists,
  /// otherwise opens a fresh one. Freezes the previous live window.
  void activate_task(int t);

  /// The typicality test. On Stay, pushes the batch's statistics into the
  /// live window. On Switch/NewTask the caller must spawn/select the task
  /// and call activate_task; cooldown then suppresses testing.
  Decision update_and_check(const FlowModel& model,
                            const TaskRegistry& registry,
                            std::span<const Sample> batch);

  int current_task() const { return current_; }
  const DetectorConfig& config() const { return cfg_; }
  const std::vector<DetectorRecord>& log() const { return log_; }
  const StatWindow* window_for(int t) const;

 private:
  bool within(const BatchStats& s, const StatWindow& w) const;

  DetectorConfig cfg_;
  std::map<int, StatWindow> windows_;
  int current_ = -1;
  int cooldown_left_ = 0;
  long batch_index_ = 0;
  std::vector<DetectorRecord> log_;
};

}  // namespace hcl
