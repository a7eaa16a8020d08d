#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hcl/flow.hpp"

namespace hcl {

class Rng;

struct RegistryConfig {
  int classes_per_task = 2;  // K
  int dim = 2;               // D
  double mean_scale = 1.0;   // means ~ N(0, s^2 I)
  double min_separation = 1.0;
  int retry_budget = 100;
};

/// Fixed latent Gaussian means, one per (class, task) pair. Means never
/// change after creation; tasks are append-only. The class prior within a
/// task is uniform, 1/K.
class TaskRegistry {
 public:
  TaskRegistry() = default;
  explicit TaskRegistry(const RegistryConfig& cfg) : cfg_(cfg) {}

  /// Samples K new means i.i.d. N(0, s^2 I), resampling any mean closer
  /// than min_separation to an existing one. Returns the new task id
  /// (consecutive from 0). Throws std::runtime_error when the retry budget
  /// is exhausted.
  int spawn_task(Rng& rng);

  const Eigen::VectorXd& mean(int y, int t) const;
  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  int num_classes() const { return cfg_.classes_per_task; }
  int dim() const { return cfg_.dim; }
  const RegistryConfig& config() const { return cfg_; }
  const std::vector<std::vector<Eigen::VectorXd>>& tasks() const { return tasks_; }

  /// Used by deserialization only.
  void append_task_means(std::vector<Eigen::VectorXd> means);

 private:
  RegistryConfig cfg_;
  std::vector<std::vector<Eigen::VectorXd>> tasks_;  // [t][y]
};

/// log p(x, y | t) = logprob(x, mu_{y,t}) + log(1/K).
double joint_logprob(const FlowModel& model, const TaskRegistry& registry,
                     const Eigen::VectorXd& x, int y, int t);

/// Bayes classification marginalized over tasks:
/// argmax_y logsumexp_t logprob(x, mu_{y,t}). Ties break toward the
/// smallest class index.
int classify(const FlowModel& model, const TaskRegistry& registry,
             const Eigen::VectorXd& x);

/// Joint (class, task) argmax; ties break toward lowest task, then class.
std::pair<int, int> classify_joint(const FlowModel& model,
                                   const TaskRegistry& registry,
                                   const Eigen::VectorXd& x);

double logsumexp(const std::vector<double>& v);

}  // namespace hcl
