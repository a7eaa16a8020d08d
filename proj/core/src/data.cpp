#include "hcl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hcl/io.hpp"
#include "hcl/rng.hpp"

namespace hcl {

std::vector<TaskDataset> gen_two_moons(int n_per_moon, double noise,
                                       Rng& rng) {
  if (noise < 0.0) throw std::invalid_argument("gen_two_moons: noise < 0");
  auto make_moon = [&](bool upper, int n) {
    std::vector<Sample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      // Angles stratified for even coverage, jittered within each cell.
      const double phi = M_PI * (i + rng.uniform()) / n;
      Eigen::VectorXd x(2);
      if (upper) {
        x << std::cos(phi), std::sin(phi);
      } else {
        x << 1.0 - std::cos(phi), 0.5 - std::sin(phi);
      }
      x[0] += noise * rng.normal();
      x[1] += noise * rng.normal();
      out.push_back({std::move(x), 0});
    }
    return out;
  };
  std::vector<TaskDataset> tasks(2);
  const int n_test = std::max(n_per_moon / 5, 50);
  for (int m = 0; m < 2; ++m) {
    tasks[m].task_label = m;
    tasks[m].num_classes = 1;
    tasks[m].train = make_moon(m == 0, n_per_moon);
    tasks[m].test = make_moon(m == 0, n_test);
  }
  return tasks;
}

std::vector<TaskDataset> gen_gaussian_tasks(int num_tasks, int num_classes,
                                            int dim, double class_sep,
                                            double task_shift, int n_per_class,
                                            Rng& rng) {
  if (num_tasks < 1 || num_classes < 1 || n_per_class < 1 || dim < 2) {
    throw std::invalid_argument("gen_gaussian_tasks: bad shape");
  }
  const double stddev = 0.5;  // covariance 0.25 I
  std::vector<TaskDataset> tasks(num_tasks);
  const int n_test = std::max(n_per_class / 5, 50);
  for (int m = 0; m < num_tasks; ++m) {
    tasks[m].task_label = m;
    tasks[m].num_classes = num_classes;
    const int task_axis = m % dim;
    const int class_axis = (m + 1) % dim;
    for (int c = 0; c < num_classes; ++c) {
      Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
      center[task_axis] += task_shift * (1 + m / dim);
      center[class_axis] += class_sep * (c - 0.5 * (num_classes - 1));
      for (int i = 0; i < n_per_class + n_test; ++i) {
        Sample s{center + stddev * rng.normal_vec(dim), c};
        (i < n_per_class ? tasks[m].train : tasks[m].test)
            .push_back(std::move(s));
      }
    }
  }
  return tasks;
}

std::vector<TaskDataset> load_embedding_dataset(const std::string& path,
                                                int classes_per_task,
                                                double test_fraction) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty dataset file: " + path);
  }
  // Header fixes the dimensionality.
  int dim = -1;
  {
    std::stringstream ss(line);
    std::string tok;
    int cols = 0;
    while (std::getline(ss, tok, ',')) ++cols;
    if (cols < 2) throw std::runtime_error("bad header in " + path);
    dim = cols - 1;
  }
  std::map<int, std::vector<Eigen::VectorXd>> by_label;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    if (!std::getline(ss, tok, ',')) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": missing label");
    }
    int label = 0;
    Eigen::VectorXd x(dim);
    try {
      label = std::stoi(tok);
      for (int d = 0; d < dim; ++d) {
        if (!std::getline(ss, tok, ',')) throw std::invalid_argument("short row");
        x[d] = std::stod(tok);
      }
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed row");
    }
    by_label[label].push_back(std::move(x));
  }
  if (by_label.empty()) throw std::runtime_error("no data rows in " + path);
  const int n_labels = static_cast<int>(by_label.size());
  if (n_labels % classes_per_task != 0) {
    throw std::runtime_error("class count " + std::to_string(n_labels) +
                             " not divisible by K=" +
                             std::to_string(classes_per_task));
  }
  std::vector<int> labels;
  for (const auto& [l, _] : by_label) labels.push_back(l);

  std::vector<TaskDataset> tasks;
  for (int start = 0; start < n_labels; start += classes_per_task) {
    TaskDataset ds;
    ds.task_label = static_cast<int>(tasks.size());
    ds.num_classes = classes_per_task;
    for (int k = 0; k < classes_per_task; ++k) {
      const auto& xs = by_label[labels[start + k]];
      const int n_test =
          static_cast<int>(std::floor(test_fraction * xs.size()));
      const int n_train = static_cast<int>(xs.size()) - n_test;
      for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
        (i < n_train ? ds.train : ds.test).push_back({xs[i], k});
      }
    }
    tasks.push_back(std::move(ds));
  }
  return tasks;
}

void save_dataset_csv(const std::string& path, const TaskDataset& ds) {
  std::ostringstream out;
  const int dim =
      ds.train.empty() ? 0 : static_cast<int>(ds.train.front().x.size());
  out << "label";
  for (int d = 0; d < dim; ++d) out << ",feature_" << d;
  out << "\n";
  out.precision(17);
  for (const Sample& s : ds.train) {
    out << s.y;
    for (int d = 0; d < dim; ++d) out << "," << s.x[d];
    out << "\n";
  }
  atomic_write(path, out.str());
}

SequenceSpec load_sequence_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sequence spec: " + path);
  nlohmann::json j;
  in >> j;
  SequenceSpec spec;
  for (const auto& v : j.at("order")) {
    spec.order.push_back(v.get<int>() - 1);  // file uses 1-based task ids
  }
  spec.epochs = j.value("epochs", 1);
  return spec;
}

}  // namespace hcl
