#include "hcl/mixture.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hcl/rng.hpp"

namespace hcl {

double logsumexp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

int TaskRegistry::spawn_task(Rng& rng) {
  std::vector<Eigen::VectorXd> means;
  means.reserve(cfg_.classes_per_task);
  for (int y = 0; y < cfg_.classes_per_task; ++y) {
    int tries = 0;
    for (;;) {
      Eigen::VectorXd mu = cfg_.mean_scale * rng.normal_vec(cfg_.dim);
      bool ok = true;
      for (const auto& task : tasks_) {
        for (const auto& other : task) {
          if ((mu - other).norm() < cfg_.min_separation) ok = false;
        }
      }
      for (const auto& other : means) {
        if ((mu - other).norm() < cfg_.min_separation) ok = false;
      }
      if (ok) {
        means.push_back(std::move(mu));
        break;
      }
      if (++tries > cfg_.retry_budget) {
        throw std::runtime_error(
            "spawn_task: retry budget exhausted; mean_scale too small for "
            "registry size");
      }
    }
  }
  tasks_.push_back(std::move(means));
  return static_cast<int>(tasks_.size()) - 1;
}

const Eigen::VectorXd& TaskRegistry::mean(int y, int t) const {
  if (t < 0 || t >= num_tasks() || y < 0 || y >= cfg_.classes_per_task) {
    throw std::out_of_range("TaskRegistry: unknown (class, task) pair");
  }
  return tasks_[t][y];
}

void TaskRegistry::append_task_means(std::vector<Eigen::VectorXd> means) {
  tasks_.push_back(std::move(means));
}

double joint_logprob(const FlowModel& model, const TaskRegistry& registry,
                     const Eigen::VectorXd& x, int y, int t) {
  return model.logprob(x, registry.mean(y, t)) -
         std::log(static_cast<double>(registry.num_classes()));
}

int classify(const FlowModel& model, const TaskRegistry& registry,
             const Eigen::VectorXd& x) {
  if (registry.num_tasks() == 0) {
    throw std::logic_error("classify: empty registry");
  }
  // One forward pass; all scores reduce to distances between f(x) and the
  // latent means (logdet is shared and drops out of the argmax, but is
  // kept so the scores are true log-densities).
  const auto fr = model.forward(x);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> per_task(registry.num_tasks());
  for (int y = 0; y < registry.num_classes(); ++y) {
    for (int t = 0; t < registry.num_tasks(); ++t) {
      const double sq = (fr.z - registry.mean(y, t)).squaredNorm();
      per_task[t] = -0.5 * sq;
    }
    const double score = logsumexp(per_task);
    if (score > best_score) {
      best_score = score;
      best = y;
    }
  }
  return best;
}

std::pair<int, int> classify_joint(const FlowModel& model,
                                   const TaskRegistry& registry,
                                   const Eigen::VectorXd& x) {
  if (registry.num_tasks() == 0) {
    throw std::logic_error("classify_joint: empty registry");
  }
  const auto fr = model.forward(x);
  int best_y = 0, best_t = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < registry.num_tasks(); ++t) {
    for (int y = 0; y < registry.num_classes(); ++y) {
      const double score = -0.5 * (fr.z - registry.mean(y, t)).squaredNorm();
      if (score > best_score) {
        best_score = score;
        best_y = y;
        best_t = t;
      }
    }
  }
  return {best_y, best_t};
}

}  // namespace hcl
