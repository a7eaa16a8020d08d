#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcl/data.hpp"
#include "hcl/flow.hpp"
#include "hcl/mixture.hpp"

namespace hcl {

/// a(i, j) = accuracy on task i after training through segment j.
/// Rows are distinct tasks in first-appearance order; columns are training
/// segments. Cells are absent until written, never zero-filled. With no
/// recurring tasks the matrix is square lower-triangular and matches the
/// usual a_{i,j} convention; with recurrences, first_trained(i) plays the
/// role of the diagonal.
class AccuracyMatrix {
 public:
  void set(int task, int segment, double acc);
  std::optional<double> get(int task, int segment) const;
  void set_first_trained(int task, int segment);
  int first_trained(int task) const;
  int num_tasks() const { return static_cast<int>(cells_.size()); }
  int num_segments() const { return segments_; }

  std::string to_csv() const;
  static AccuracyMatrix from_csv(const std::string& csv);
  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::vector<std::vector<std::optional<double>>> cells_;  // [task][segment]
  std::vector<int> first_trained_;
  int segments_ = 0;
};

/// (1/tau) sum_i a_{i, last}. Throws if the final column has gaps.
double avg_final_accuracy(const AccuracyMatrix& a);

/// (1/(tau-1)) sum_{i<tau} (a_{i, first_trained(i)} - a_{i, last}).
/// Absent (nullopt) for a single task.
std::optional<double> avg_forgetting(const AccuracyMatrix& a);

/// Joint (class, task) accuracy. Predicted task ids pass through the
/// relabel map (detected id -> ground-truth row), so spurious clusters
/// spawned while training on task T count as T.
double overall_accuracy(const FlowModel& model, const TaskRegistry& registry,
                        const std::vector<TaskDataset>& test_sets,
                        const std::map<int, int>& relabel);

/// Sample mean and (n-1)-normalized standard deviation; std is 0 for a
/// single value. Throws std::invalid_argument on an empty span.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace hcl
