#include "hcl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hcl {

Method method_from_string(const std::string& s) {
  if (s == "none" || s == "adam") return Method::None;
  if (s == "gr") return Method::GR;
  if (s == "fr") return Method::FR;
  if (s == "er") return Method::ER;
  if (s == "mtl") return Method::MTL;
  throw std::invalid_argument("unknown method: " + s);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::GR: return "gr";
    case Method::FR: return "fr";
    case Method::ER: return "er";
    case Method::MTL: return "mtl";
  }
  return "?";
}

ContinualTrainer::ContinualTrainer(const TrainerConfig& cfg,
                                   std::uint64_t seed)
    : cfg_(cfg),
      rng_means_(Rng(seed).substream(streams::kMeans)),
      rng_replay_(Rng(seed).substream(streams::kReplay)),
      rng_shuffle_(Rng(seed).substream(streams::kShuffle)),
      rng_init_(Rng(seed).substream(streams::kInit)),
      rng_buffer_(Rng(seed).substream(streams::kReplay + 16)),
      model_(FlowModel::create(cfg.flow, rng_init_)),
      registry_(cfg.registry),
      adam_(AdamState::create(model_.num_params(), cfg.adam)),
      theta_(model_.get_params()),
      detector_(cfg.detector) {}

int ContinualTrainer::spawn_first_task() {
  const int id = registry_.spawn_task(rng_means_);
  current_ = id;
  detector_.activate_task(id);
  return id;
}

void ContinualTrainer::do_new_task(int gt_label, long batch_index, int segment,
                                   std::vector<TrainEvent>& events) {
  if (registry_.num_tasks() > 0) {
    std::vector<int> covered(registry_.num_tasks());
    std::iota(covered.begin(), covered.end(), 0);
    snapshot_ = take_snapshot(model_, registry_, std::move(covered),
                              batch_index);
  }
  const int from = current_;
  const int id = registry_.spawn_task(rng_means_);
  relabel_[id] = gt_label;
  if (!gt_to_registry_.contains(gt_label)) gt_to_registry_[gt_label] = id;
  current_ = id;
  detector_.activate_task(id);
  events.push_back({batch_index, segment, "new_task", from, id});
}

void ContinualTrainer::do_switch(int target, long batch_index, int segment,
                                 std::vector<TrainEvent>& events) {
  std::vector<int> covered(registry_.num_tasks());
  std::iota(covered.begin(), covered.end(), 0);
  snapshot_ =
      take_snapshot(model_, registry_, std::move(covered), batch_index);
  const int from = current_;
  current_ = target;
  detector_.activate_task(target);
  events.push_back({batch_index, segment, "switch", from, target});
}

ContinualTrainer::StepLoss ContinualTrainer::train_step(
    std::span<const Sample> batch) {
  if (current_ < 0) throw std::logic_error("train_step: no current task");

  std::vector<LossTerm> main_terms;
  main_terms.reserve(batch.size());
  for (const Sample& s : batch) {
    main_terms.push_back({LossTerm::Kind::NegLogLik, s.x,
                          registry_.mean(s.y, current_), 0.0});
  }

  std::vector<LossTerm> extra_terms;
  switch (cfg_.method) {
    case Method::None:
      break;
    case Method::GR:
      if (snapshot_) {
        const auto replay =
            draw_replay(*snapshot_, rng_replay_, cfg_.batch_size);
        append_gr_terms(model_, registry_, replay, extra_terms);
      }
      break;
    case Method::FR:
      if (snapshot_) {
        const auto replay =
            draw_replay(*snapshot_, rng_replay_, cfg_.batch_size);
        append_fr_terms(*snapshot_, replay, extra_terms, cfg_.alpha);
      }
      break;
    case Method::ER:
      for (const auto& [t, buf] : er_buffers_) {
        if (t == current_ || buf.empty()) continue;
        for (int i = 0; i < cfg_.batch_size; ++i) {
          const Sample& s =
              buf[rng_buffer_.uniform_int(static_cast<int>(buf.size()))];
          extra_terms.push_back(
              {LossTerm::Kind::NegLogLik, s.x, registry_.mean(s.y, t), 0.0});
        }
      }
      break;
    case Method::MTL:
      if (stream_tasks_ != nullptr) {
        for (int label : seen_labels_) {
          const int t = gt_to_registry_.at(label);
          if (t == current_) continue;
          const auto& train = (*stream_tasks_)[label].train;
          for (int i = 0; i < cfg_.batch_size; ++i) {
            const Sample& s =
                train[rng_buffer_.uniform_int(static_cast<int>(train.size()))];
            extra_terms.push_back(
                {LossTerm::Kind::NegLogLik, s.x, registry_.mean(s.y, t), 0.0});
          }
        }
      }
      break;
  }

  // ER and MTL extend the batch; GR and FR are separate mean terms.
  StepLoss out;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model_.num_params());
  const bool appended =
      cfg_.method == Method::ER || cfg_.method == Method::MTL;
  const double n_total = static_cast<double>(
      batch.size() + (appended ? extra_terms.size() : 0));
  for (auto& t : main_terms) t.weight = 1.0 / n_total;
  out.nll = loss_and_grad(model_, main_terms, grad);
  if (!extra_terms.empty()) {
    if (appended) {
      for (auto& t : extra_terms) t.weight = 1.0 / n_total;
    }
    Eigen::VectorXd extra_grad;
    out.extra = loss_and_grad(model_, extra_terms, extra_grad);
    grad += extra_grad;
  }
  out.total = out.nll + out.extra;

  if (!std::isfinite(out.total) || !grad.allFinite()) {
    diverged_ = true;  // parameters keep their last good value
    return out;
  }
  adam_step_inplace(theta_, grad, adam_);
  model_.set_params(theta_);
  return out;
}

void ContinualTrainer::evaluate(const std::vector<TaskDataset>& tasks,
                                const std::vector<int>& seen_labels,
                                int segment, AccuracyMatrix& acc) const {
  for (int label : seen_labels) {
    const TaskDataset& ds = tasks[label];
    long correct = 0;
    for (const Sample& s : ds.test) {
      if (classify(model_, registry_, s.x) == s.y) ++correct;
    }
    acc.set(label, segment,
            static_cast<double>(correct) /
                static_cast<double>(ds.test.size()));
  }
}

TrainResult ContinualTrainer::run(const std::vector<TaskDataset>& tasks,
                                  const SequenceSpec& seq) {
  if (seq.order.empty()) throw std::invalid_argument("empty task sequence");
  TrainResult res;
  stream_tasks_ = &tasks;
  const bool use_detector =
      cfg_.mode == Mode::TaskAgnostic && !cfg_.oracle_detector;

  long batch_index = 0;
  long step_count = 0;
  for (std::size_t seg = 0; seg < seq.order.size() && !diverged_; ++seg) {
    const int gt = seq.order[seg];
    const TaskDataset& ds = tasks[gt];
    if (std::find(seen_labels_.begin(), seen_labels_.end(), gt) ==
        seen_labels_.end()) {
      seen_labels_.push_back(gt);
    }

    if (seg == 0) {
      const int id = registry_.spawn_task(rng_means_);
      relabel_[id] = gt;
      gt_to_registry_[gt] = id;
      current_ = id;
      detector_.activate_task(id);
      res.acc.set_first_trained(gt, static_cast<int>(seg));
    } else if (!use_detector) {
      // Ground-truth boundary (task-aware mode or injected oracle).
      const auto it = gt_to_registry_.find(gt);
      if (it == gt_to_registry_.end()) {
        do_new_task(gt, batch_index, static_cast<int>(seg), res.events);
      } else if (it->second != current_) {
        do_switch(it->second, batch_index, static_cast<int>(seg), res.events);
      }
      res.acc.set_first_trained(gt, static_cast<int>(seg));
    } else {
      res.acc.set_first_trained(gt, static_cast<int>(seg));
    }

    const int n = static_cast<int>(ds.train.size());
    std::vector<int> perm(n);
    const int epochs = seq.epochs > 0 ? seq.epochs : cfg_.epochs_per_task;
    for (int epoch = 0; epoch < epochs && !diverged_; ++epoch) {
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng_shuffle_.uniform_int(i + 1)]);
      }
      // Ragged final batches are dropped: the detector statistics are sums
      // over the batch and only comparable at a fixed batch size.
      const int n_batches = n / cfg_.batch_size;
      for (int b = 0; b < n_batches && !diverged_; ++b) {
        std::vector<Sample> batch;
        batch.reserve(cfg_.batch_size);
        for (int k = 0; k < cfg_.batch_size; ++k) {
          batch.push_back(ds.train[perm[b * cfg_.batch_size + k]]);
        }
        ++batch_index;

        if (use_detector) {
          const Decision d =
              detector_.update_and_check(model_, registry_, batch);
          if (d.kind == Decision::Kind::NewTask) {
            do_new_task(gt, batch_index, static_cast<int>(seg), res.events);
          } else if (d.kind == Decision::Kind::Switch &&
                     d.task != current_) {
            do_switch(d.task, batch_index, static_cast<int>(seg), res.events);
          }
        }

        const StepLoss loss = train_step(batch);
        ++step_count;
        res.steps.push_back({step_count, static_cast<int>(seg), current_,
                             loss.nll, loss.extra, loss.total});
        if (diverged_) {
          res.abort_message = "non-finite loss at step " +
                              std::to_string(step_count) + " (segment " +
                              std::to_string(seg + 1) + ")";
          break;
        }

        if (cfg_.method == Method::ER) {
          auto& buf = er_buffers_[current_];
          long& seen = er_seen_[current_];
          for (const Sample& s : batch) {
            ++seen;
            if (static_cast<int>(buf.size()) < cfg_.er_capacity) {
              buf.push_back(s);
            } else {
              const long j = rng_buffer_.uniform_int(static_cast<int>(seen));
              if (j < cfg_.er_capacity) buf[j] = s;
            }
          }
        }
      }
    }
    evaluate(tasks, seen_labels_, static_cast<int>(seg), res.acc);
  }

  res.model = model_;
  res.registry = registry_;
  res.detector_log = detector_.log();
  res.relabel = relabel_;
  res.snapshot = snapshot_;
  res.diverged = diverged_;
  stream_tasks_ = nullptr;
  return res;
}

}  // namespace hcl
