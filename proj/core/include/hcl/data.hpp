#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hcl {

class Rng;

struct Sample {
  Eigen::VectorXd x;
  int y = 0;  // class index in [0, K)
};

struct TaskDataset {
  int task_label = 0;  // ground truth, evaluation only
  int num_classes = 1;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Ordered task indices (repeats allowed) plus the per-task epoch budget.
struct SequenceSpec {
  std::vector<int> order;
  int epochs = 1;
};

/// Two interleaving half circles, one task per moon, single class each.
/// Task 1 is the upper moon centered at the origin.
std::vector<TaskDataset> gen_two_moons(int n_per_moon, double noise, Rng& rng);

/// M domain-incremental Gaussian tasks. Task m shifts all class centers by
/// task_shift along axis direction e_{m mod D} (a further shelf of
/// task_shift per wrap when M > D); within a task, class centers sit
/// class_sep apart along the next axis. Per-class covariance is 0.25 I.
/// Test split holds max(n/5, 50) extra samples per class.
std::vector<TaskDataset> gen_gaussian_tasks(int num_tasks, int num_classes,
                                            int dim, double class_sep,
                                            double task_shift,
                                            int n_per_class, Rng& rng);

/// CSV with header `label,feature_0,...,feature_{D-1}`. Original classes
/// are partitioned into tasks of classes_per_task consecutive labels and
/// re-indexed to [0, K) within each task. test_fraction of each class is
/// held out (deterministic tail split).
std::vector<TaskDataset> load_embedding_dataset(const std::string& path,
                                                int classes_per_task,
                                                double test_fraction = 0.2);

/// Writes one dataset back in the same CSV format (train rows only).
void save_dataset_csv(const std::string& path, const TaskDataset& ds);

SequenceSpec load_sequence_spec(const std::string& path);

}  // namespace hcl
