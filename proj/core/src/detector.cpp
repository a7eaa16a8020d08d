#include "hcl/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hcl {

BatchStats batch_stats(const FlowModel& model, const TaskRegistry& registry,
                       std::span<const Sample> batch, int t) {
  if (batch.empty()) throw std::invalid_argument("batch_stats: empty batch");
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  BatchStats s;
  for (const Sample& sample : batch) {
    const auto fr = model.forward(sample.x);
    const double latent_ll =
        -0.5 * model.dim() * kLog2Pi -
        0.5 * (fr.z - registry.mean(sample.y, t)).squaredNorm();
    s.s2 += latent_ll;
    s.s1 += latent_ll + fr.logdet;
  }
  s.s3 = s.s1 - s.s2;
  return s;
}

void StatWindow::push(const BatchStats& s) {
  for (int i = 0; i < 3; ++i) {
    buf_[i].push_back(s.get(i));
    if (static_cast<int>(buf_[i].size()) > window_) buf_[i].pop_front();
  }
}

double StatWindow::mean(int stat) const {
  const auto& b = buf_[stat];
  if (b.empty()) return 0.0;
  double s = 0.0;
  for (double v : b) s += v;
  return s / static_cast<double>(b.size());
}

double StatWindow::stddev(int stat) const {
  const auto& b = buf_[stat];
  const double mu = mean(stat);
  double s = 0.0;
  for (double v : b) s += (v - mu) * (v - mu);
  const double var =
      b.size() > 1 ? s / static_cast<double>(b.size() - 1) : 0.0;
  const double floor = 1e-6 * std::abs(mu) + 1e-12;
  return std::max(std::sqrt(var), floor);
}

void Detector::activate_task(int t) {
  if (current_ >= 0 && !windows_.contains(current_)) {
    windows_.emplace(current_, StatWindow(cfg_.window));
  }
  // The departing task's window stays frozen in the map; the incoming
  // task's window is resumed if it has been seen before.
  if (!windows_.contains(t)) windows_.emplace(t, StatWindow(cfg_.window));
  current_ = t;
  cooldown_left_ = cfg_.cooldown;
}

const StatWindow* Detector::window_for(int t) const {
  auto it = windows_.find(t);
  return it == windows_.end() ? nullptr : &it->second;
}

bool Detector::within(const BatchStats& s, const StatWindow& w) const {
  for (int i = 0; i < 3; ++i) {
    if (!cfg_.enabled[i]) continue;
    if (std::abs(s.get(i) - w.mean(i)) > cfg_.lambda * w.stddev(i)) {
      return false;
    }
  }
  return true;
}

Decision Detector::update_and_check(const FlowModel& model,
                                    const TaskRegistry& registry,
                                    std::span<const Sample> batch) {
  if (current_ < 0) throw std::logic_error("Detector: no active task");
  ++batch_index_;
  StatWindow& live = windows_.at(current_);
  const BatchStats s = batch_stats(model, registry, batch, current_);

  DetectorRecord rec;
  rec.batch_index = batch_index_;
  rec.task = current_;
  rec.stats = s;
  int first_enabled = 0;
  for (int i = 0; i < 3; ++i) {
    if (cfg_.enabled[i]) {
      first_enabled = i;
      break;
    }
  }
  rec.win_mean = live.mean(first_enabled);
  rec.win_std = live.stddev(first_enabled);

  const bool suppressed =
      cooldown_left_ > 0 || live.size() < cfg_.warmup;
  if (cooldown_left_ > 0) --cooldown_left_;
  if (suppressed || within(s, live)) {
    live.push(s);
    rec.decision = "stay";
    log_.push_back(rec);
    return {Decision::Kind::Stay, current_};
  }

  // Out of the typical set: try to match a previous task against its
  // frozen window.
  int best_task = -1;
  double best_s1 = -std::numeric_limits<double>::infinity();
  for (const auto& [t, win] : windows_) {
    if (t == current_ || win.size() < cfg_.warmup) continue;
    const BatchStats st = batch_stats(model, registry, batch, t);
    if (within(st, win) && st.s1 > best_s1) {
      best_s1 = st.s1;
      best_task = t;
    }
  }
  if (best_task >= 0) {
    rec.decision = "switch:" + std::to_string(best_task);
    log_.push_back(rec);
    return {Decision::Kind::Switch, best_task};
  }
  rec.decision = "new_task";
  log_.push_back(rec);
  return {Decision::Kind::NewTask, -1};
}

}  // namespace hcl
