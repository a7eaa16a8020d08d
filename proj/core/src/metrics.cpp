#include "hcl/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hcl {

void AccuracyMatrix::set(int task, int segment, double acc) {
  if (task >= static_cast<int>(cells_.size())) {
    cells_.resize(task + 1);
    first_trained_.resize(task + 1, -1);
  }
  if (segment >= segments_) segments_ = segment + 1;
  for (auto& row : cells_) {
    if (static_cast<int>(row.size()) < segments_) row.resize(segments_);
  }
  cells_[task][segment] = acc;
}

std::optional<double> AccuracyMatrix::get(int task, int segment) const {
  if (task < 0 || task >= num_tasks() || segment < 0 || segment >= segments_) {
    return std::nullopt;
  }
  return cells_[task][segment];
}

void AccuracyMatrix::set_first_trained(int task, int segment) {
  if (task >= static_cast<int>(first_trained_.size())) {
    first_trained_.resize(task + 1, -1);
    cells_.resize(task + 1);
  }
  if (first_trained_[task] < 0) first_trained_[task] = segment;
}

int AccuracyMatrix::first_trained(int task) const {
  if (task < 0 || task >= static_cast<int>(first_trained_.size()) ||
      first_trained_[task] < 0) {
    throw std::logic_error("AccuracyMatrix: unknown first-trained segment");
  }
  return first_trained_[task];
}

std::string AccuracyMatrix::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "task";
  for (int j = 0; j < segments_; ++j) out << ",after_" << (j + 1);
  out << ",first_trained\n";
  for (int i = 0; i < num_tasks(); ++i) {
    out << (i + 1);
    for (int j = 0; j < segments_; ++j) {
      out << ",";
      if (cells_[i][j]) out << *cells_[i][j];
    }
    out << "," << (first_trained_[i] + 1) << "\n";
  }
  return out.str();
}

AccuracyMatrix AccuracyMatrix::from_csv(const std::string& csv) {
  AccuracyMatrix m;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty matrix csv");
  int cols = 0;
  for (char c : line) {
    if (c == ',') ++cols;
  }
  const int segments = cols - 1;
  int task = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');  // task id
    for (int j = 0; j < segments; ++j) {
      std::getline(ls, tok, ',');
      if (!tok.empty()) m.set(task, j, std::stod(tok));
    }
    std::getline(ls, tok, ',');
    m.set_first_trained(task, std::stoi(tok) - 1);
    ++task;
  }
  m.segments_ = segments;
  for (auto& row : m.cells_) row.resize(segments);
  return m;
}

double avg_final_accuracy(const AccuracyMatrix& a) {
  const int tau = a.num_tasks();
  if (tau == 0) throw std::invalid_argument("avg_final_accuracy: empty");
  const int last = a.num_segments() - 1;
  double s = 0.0;
  for (int i = 0; i < tau; ++i) {
    const auto v = a.get(i, last);
    if (!v) throw std::invalid_argument("avg_final_accuracy: missing entry");
    s += *v;
  }
  return s / tau;
}

std::optional<double> avg_forgetting(const AccuracyMatrix& a) {
  const int tau = a.num_tasks();
  if (tau < 2) return std::nullopt;
  const int last = a.num_segments() - 1;
  double s = 0.0;
  int count = 0;
  for (int i = 0; i < tau; ++i) {
    const int own = a.first_trained(i);
    if (own == last) continue;  // the task trained last contributes nothing
    const auto early = a.get(i, own);
    const auto fin = a.get(i, last);
    if (!early || !fin) {
      throw std::invalid_argument("avg_forgetting: missing entry");
    }
    s += *early - *fin;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return s / count;
}

double overall_accuracy(const FlowModel& model, const TaskRegistry& registry,
                        const std::vector<TaskDataset>& test_sets,
                        const std::map<int, int>& relabel) {
  long correct = 0, total = 0;
  for (const TaskDataset& ds : test_sets) {
    for (const Sample& s : ds.test) {
      const auto [y, t] = classify_joint(model, registry, s.x);
      const auto it = relabel.find(t);
      if (it == relabel.end()) {
        throw std::invalid_argument("overall_accuracy: unmapped task id " +
                                    std::to_string(t));
      }
      if (y == s.y && it->second == ds.task_label) ++correct;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace hcl
