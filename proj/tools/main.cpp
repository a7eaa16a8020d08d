// Experiment runner: all numerics live in the library; this binary only
// parses configuration, drives runs and writes artifacts.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "hcl/data.hpp"
#include "hcl/detector.hpp"
#include "hcl/experiments.hpp"
#include "hcl/io.hpp"
#include "hcl/lab.hpp"
#include "hcl/metrics.hpp"
#include "hcl/mlp.hpp"
#include "hcl/numdiff.hpp"
#include "hcl/rng.hpp"
#include "hcl/serialize.hpp"
#include "hcl/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

using json = nlohmann::ordered_json;
using namespace hcl;
using hclcli::ConfigError;
using hclcli::ExperimentConfig;

std::vector<TaskDataset> make_dataset(const ExperimentConfig& cfg,
                                      std::uint64_t seed) {
  if (cfg.dataset_kind == "gaussian") {
    Rng rng(seed, streams::kData);
    return gen_gaussian_tasks(cfg.tasks, cfg.classes, cfg.dim, cfg.class_sep,
                              cfg.task_shift, cfg.n_per_class, rng);
  }
  if (cfg.dataset_kind == "moons") {
    Rng rng(seed, streams::kData);
    return gen_two_moons(cfg.n_per_moon, cfg.noise, rng);
  }
  return load_embedding_dataset(cfg.path, cfg.classes);
}

SequenceSpec make_sequence(const ExperimentConfig& cfg, int num_tasks) {
  SequenceSpec seq;
  if (cfg.order.empty()) {
    for (int t = 0; t < num_tasks; ++t) seq.order.push_back(t);
  } else {
    for (int t : cfg.order) seq.order.push_back(t - 1);
  }
  seq.epochs = cfg.epochs;
  return seq;
}

std::string losses_csv(const TrainResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "step,segment,task,nll,extra,total\n";
  for (const StepRecord& s : r.steps)
    out << s.step << ',' << s.segment << ',' << s.task << ',' << s.nll << ','
        << s.extra << ',' << s.total << '\n';
  return out.str();
}

std::string detector_events_csv(const TrainResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "batch,task,s1,s2,s3,win_mean,win_std,decision\n";
  for (const DetectorRecord& d : r.detector_log)
    out << d.batch_index << ',' << d.task << ',' << d.stats.s1 << ','
        << d.stats.s2 << ',' << d.stats.s3 << ',' << d.win_mean << ','
        << d.win_std << ',' << d.decision << '\n';
  return out.str();
}

json metrics_json(const TrainResult& r,
                  const std::vector<TaskDataset>& tasks) {
  json j;
  j["avg_final_accuracy"] = avg_final_accuracy(r.acc);
  const auto forgetting = avg_forgetting(r.acc);
  if (forgetting) j["avg_forgetting"] = *forgetting;
  j["overall_accuracy"] = overall_accuracy(r.model, r.registry, tasks,
                                           r.relabel);
  json finals = json::array();
  for (int t = 0; t < r.acc.num_tasks(); ++t)
    finals.push_back(*r.acc.get(t, r.acc.num_segments() - 1));
  j["final_per_task"] = finals;
  j["registered_tasks"] = r.registry.num_tasks();
  j["diverged"] = r.diverged;
  return j;
}

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed_flag,
            std::optional<std::string> out_flag) {
  ExperimentConfig cfg = hclcli::parse_config_file(config_path);
  for (const std::string& o : overrides) hclcli::apply_override(cfg, o);
  if (seed_flag) cfg.seeds = {*seed_flag};
  if (out_flag) cfg.outdir = *out_flag;
  hclcli::validate(cfg);

  if (cfg.dataset_kind == "embedding" &&
      !std::filesystem::exists(cfg.path))
    throw ConfigError("dataset file not found: " + cfg.path);

  bool any_diverged = false;
  std::vector<double> accs, forgets, overalls;
  for (std::uint64_t seed : cfg.seeds) {
    const auto tasks = make_dataset(cfg, seed);
    const SequenceSpec seq = make_sequence(cfg, static_cast<int>(tasks.size()));
    ContinualTrainer trainer(cfg.trainer, seed);
    const TrainResult r = trainer.run(tasks, seq);

    const std::string dir = cfg.outdir + "/seed_" + std::to_string(seed);
    atomic_write(dir + "/metrics.json", metrics_json(r, tasks).dump(2) + "\n");
    atomic_write(dir + "/acc_matrix.csv", r.acc.to_csv());
    atomic_write(dir + "/losses.csv", losses_csv(r));
    atomic_write(dir + "/detector_events.csv", detector_events_csv(r));
    save_model(dir + "/model.json", r.model, r.registry);

    if (r.diverged) {
      std::cerr << "seed " << seed << ": training diverged ("
                << r.abort_message << "); partial artifacts kept in " << dir
                << "\n";
      any_diverged = true;
      continue;
    }
    accs.push_back(avg_final_accuracy(r.acc));
    const auto f = avg_forgetting(r.acc);
    if (f) forgets.push_back(*f);
    overalls.push_back(overall_accuracy(r.model, r.registry, tasks,
                                        r.relabel));
    std::cout << "seed " << seed << ": avg final accuracy "
              << avg_final_accuracy(r.acc) << "\n";
  }

  if (!accs.empty()) {
    json agg;
    auto put = [&](const char* name, const std::vector<double>& v) {
      if (v.empty()) return;
      const MeanStd ms = mean_std(v);
      agg[name] = {{"mean", ms.mean}, {"std", ms.std}};
    };
    put("avg_final_accuracy", accs);
    put("avg_forgetting", forgets);
    put("overall_accuracy", overalls);
    agg["seeds"] = cfg.seeds;
    atomic_write(cfg.outdir + "/aggregate.json", agg.dump(2) + "\n");
    std::cout << "aggregate written to " << cfg.outdir << "/aggregate.json\n";
  }
  return any_diverged ? kExitNumerical : kExitOk;
}

std::string replay_points_csv(const MoonsResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "x0,x1,z_snap_0,z_snap_1,z_final_0,z_final_1\n";
  for (size_t i = 0; i < r.replay.size(); ++i)
    out << r.replay[i].x[0] << ',' << r.replay[i].x[1] << ','
        << r.latent_snap[i][0] << ',' << r.latent_snap[i][1] << ','
        << r.latent_final[i][0] << ',' << r.latent_final[i][1] << '\n';
  return out.str();
}

int cmd_moons(const std::string& method, std::uint64_t seed,
              const std::string& outdir, double alpha, int steps1, int steps2,
              double noise) {
  MoonsConfig mc;
  mc.method = method_from_string(method);
  mc.seed = seed;
  mc.alpha = alpha;
  mc.steps_task1 = steps1;
  mc.steps_task2 = steps2;
  mc.noise = noise;
  mc.mean_scale = 1.0;
  mc.min_separation = 1.0;
  const MoonsResult r = run_moons_experiment(mc);
  if (r.diverged) {
    std::cerr << "moons training diverged\n";
    return kExitNumerical;
  }
  atomic_write(outdir + "/replay_points.csv", replay_points_csv(r));
  atomic_write(outdir + "/density_grid.csv",
               density_grid_csv(r.final_model, r.registry, -2.5, 2.5, 200));
  json j;
  j["method"] = method;
  j["seed"] = seed;
  j["max_latent_displacement"] = r.max_latent_displacement;
  j["heldout_loglik_snapshot"] = r.heldout_ll_snapshot;
  j["heldout_loglik_final"] = r.heldout_ll_final;
  atomic_write(outdir + "/moons_summary.json", j.dump(2) + "\n");
  std::cout << "max latent displacement of replay points: "
            << r.max_latent_displacement << "\n"
            << "held-out task-1 avg log-lik: snapshot "
            << r.heldout_ll_snapshot << ", final " << r.heldout_ll_final
            << "\n";
  return kExitOk;
}

int cmd_toy(double gamma, const std::string& outdir) {
  Rng rng(42, streams::kData);
  std::vector<double> zs(10000);
  for (double& z : zs) z = rng.normal();
  std::ostringstream out;
  out.precision(17);
  out << "theta,fr_loss,gr_loss\n";
  for (int i = 1; i <= 300; ++i) {
    const double theta = 0.01 * i;
    out << theta << ',' << toy_fr_loss(theta, gamma, zs) << ','
        << toy_gr_loss(theta, gamma, zs) << '\n';
  }
  atomic_write(outdir + "/toy_losses.csv", out.str());

  // Companion diagnostic: per-sample replay-vs-regularization terms for a
  // slightly perturbed small flow.
  Rng init(5, streams::kInit);
  FlowConfig fc;
  fc.dim = 2;
  fc.num_layers = 2;
  fc.hidden = {8};
  FlowModel past = FlowModel::create(fc, init);
  Eigen::VectorXd theta_p(past.num_params());
  for (int i = 0; i < theta_p.size(); ++i) theta_p[i] = 0.2 * init.normal();
  past.set_params(theta_p);
  RegistryConfig rc;
  rc.classes_per_task = 1;
  rc.dim = 2;
  TaskRegistry registry(rc);
  Rng means(5, streams::kMeans);
  registry.spawn_task(means);
  const Snapshot snap = take_snapshot(past, registry, {0});
  FlowModel live = past;
  Eigen::VectorXd theta_l = theta_p;
  for (int i = 0; i < theta_l.size(); ++i) theta_l[i] += 0.02 * init.normal();
  live.set_params(theta_l);
  std::vector<Eigen::VectorXd> zdraws;
  for (int i = 0; i < 200; ++i)
    zdraws.push_back(registry.mean(0, 0) + init.normal_vec(2));
  const auto rows = bound_probe(live, snap, registry, zdraws, 0, 0);
  std::ostringstream probe;
  probe.precision(17);
  probe << "gr_term,fr_term\n";
  for (const auto& row : rows)
    probe << row.gr_term << ',' << row.fr_term << '\n';
  atomic_write(outdir + "/bound_probe.csv", probe.str());
  std::cout << "wrote " << outdir << "/toy_losses.csv and bound_probe.csv\n";
  return kExitOk;
}

int cmd_gradcheck() {
  Rng rng(17, streams::kInit);
  FlowConfig fc;
  fc.dim = 3;
  fc.num_layers = 3;
  fc.hidden = {8};
  FlowModel model = FlowModel::create(fc, rng);
  Eigen::VectorXd theta(model.num_params());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.3 * rng.normal();
  model.set_params(theta);

  std::vector<LossTerm> terms;
  for (int i = 0; i < 3; ++i)
    terms.push_back({LossTerm::Kind::NegLogLik, rng.normal_vec(3),
                     rng.normal_vec(3), 0.5});
  terms.push_back({LossTerm::Kind::LatentMatch, rng.normal_vec(3),
                   rng.normal_vec(3), 0.5});
  Eigen::VectorXd grad(model.num_params());
  loss_and_grad(model, terms, grad);
  const Eigen::VectorXd fd = finite_diff_grad(
      [&](const Eigen::VectorXd& th) {
        FlowModel probe = model;
        probe.set_params(th);
        Eigen::VectorXd g(probe.num_params());
        return loss_and_grad(probe, terms, g);
      },
      theta, 1e-5);
  double worst = 0.0;
  for (int i = 0; i < grad.size(); ++i) {
    if (std::abs(fd[i]) <= 1e-8 && std::abs(grad[i]) <= 1e-8) continue;
    worst = std::max(worst, std::abs(grad[i] - fd[i]) /
                                std::max(std::abs(fd[i]), 1e-8));
  }
  std::cout << "max relative gradient error: " << worst << "\n";
  return worst < 1e-5 ? kExitOk : kExitNumerical;
}

int cmd_detect_demo(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.tasks = 2;
  cfg.order = {1, 2, 1};
  cfg.epochs = 16;
  cfg.trainer.mode = Mode::TaskAgnostic;
  cfg.trainer.method = Method::FR;
  cfg.trainer.alpha = 5.0;
  cfg.trainer.adam.lr = 3e-3;
  cfg.trainer.registry.dim = 8;
  cfg.trainer.registry.mean_scale = 3.0;
  cfg.trainer.registry.min_separation = 6.0;
  cfg.trainer.flow.dim = 8;
  cfg.trainer.flow.num_layers = 4;
  cfg.trainer.flow.hidden = {32, 32};

  hclcli::validate(cfg);
  const auto tasks = make_dataset(cfg, seed);
  const SequenceSpec seq = make_sequence(cfg, cfg.tasks);
  ContinualTrainer trainer(cfg.trainer, seed);
  const TrainResult r = trainer.run(tasks, seq);

  std::cout << "scripted stream [T1, T2, T1], " << r.detector_log.size()
            << " batches\n";
  for (const TrainEvent& e : r.events)
    std::cout << "batch " << e.batch_index << " segment " << e.segment << ": "
              << e.kind
              << (e.kind == "switch"
                      ? " -> T" + std::to_string(e.to_task + 1)
                      : " (T" + std::to_string(e.to_task + 1) + ")")
              << "\n";
  std::cout << "registered tasks: " << r.registry.num_tasks() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-learning flow experiments"};
  app.require_subcommand(1);

  std::string config_path, method = "fr", outdir = "out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  bool seed_given = false, out_given = false;
  double alpha = 50.0, gamma = 1.0, noise = 0.3;
  int steps1 = 1500, steps2 = 1500;

  auto* run = app.add_subcommand("run", "train a task sequence from a config");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--override", overrides, "section.key=value overrides");
  run->add_option("--seed", seed, "single seed (replaces config seeds)")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", outdir, "output directory")
      ->each([&](const std::string&) { out_given = true; });

  auto* moons = app.add_subcommand(
      "moons", "two-moons replay-vs-regularization comparison");
  moons->add_option("--method", method, "fr or gr");
  moons->add_option("--seed", seed, "rng seed");
  moons->add_option("--out", outdir, "output directory");
  moons->add_option("--alpha", alpha, "regularization weight");
  moons->add_option("--steps1", steps1, "task-1 training steps");
  moons->add_option("--steps2", steps2, "task-2 training steps");
  moons->add_option("--noise", noise, "moon noise level");

  auto* toy = app.add_subcommand("toy", "scalar-flow loss curves");
  toy->add_option("--gamma", gamma, "snapshot scale");
  toy->add_option("--out", outdir, "output directory");

  app.add_subcommand("gradcheck", "finite-difference gradient check");

  auto* demo = app.add_subcommand("detect-demo",
                                  "stream [T1,T2,T1] through the detector");
  demo->add_option("--seed", seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, overrides,
                     seed_given ? std::optional(seed) : std::nullopt,
                     out_given ? std::optional(outdir) : std::nullopt);
    if (moons->parsed())
      return cmd_moons(method, seed, outdir, alpha, steps1, steps2, noise);
    if (toy->parsed()) return cmd_toy(gamma, outdir);
    if (app.get_subcommand("gradcheck")->parsed()) return cmd_gradcheck();
    if (demo->parsed()) return cmd_detect_demo(seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
