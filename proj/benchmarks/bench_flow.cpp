#include <benchmark/benchmark.h>

#include "hcl/detector.hpp"
#include "hcl/flow.hpp"
#include "hcl/mixture.hpp"
#include "hcl/rng.hpp"

namespace {

using namespace hcl;

FlowModel make_model(int dim, int layers, Rng& rng) {
  FlowConfig cfg;
  cfg.dim = dim;
  cfg.num_layers = layers;
  cfg.hidden = {32, 32};
  FlowModel m = FlowModel::create(cfg, rng);
  Eigen::VectorXd theta(m.num_params());
  for (int i = 0; i < theta.size(); ++i) theta[i] = 0.1 * rng.normal();
  m.set_params(theta);
  return m;
}

void BM_FlowForward(benchmark::State& state) {
  Rng rng(1, streams::kInit);
  const int dim = static_cast<int>(state.range(0));
  const FlowModel m = make_model(dim, 4, rng);
  const Eigen::VectorXd x = rng.normal_vec(dim);
  for (auto _ : state) {
    const auto [z, logdet] = m.forward(x);
    benchmark::DoNotOptimize(z);
    benchmark::DoNotOptimize(logdet);
  }
}
BENCHMARK(BM_FlowForward)->Arg(2)->Arg(8)->Arg(32);

void BM_FlowInverse(benchmark::State& state) {
  Rng rng(1, streams::kInit);
  const int dim = static_cast<int>(state.range(0));
  const FlowModel m = make_model(dim, 4, rng);
  const Eigen::VectorXd z = rng.normal_vec(dim);
  for (auto _ : state) {
    const Eigen::VectorXd x = m.inverse(z);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_FlowInverse)->Arg(2)->Arg(8)->Arg(32);

void BM_LossAndGrad(benchmark::State& state) {
  Rng rng(1, streams::kInit);
  const int dim = static_cast<int>(state.range(0));
  FlowModel m = make_model(dim, 4, rng);
  std::vector<LossTerm> terms;
  for (int i = 0; i < 32; ++i)
    terms.push_back({LossTerm::Kind::NegLogLik, rng.normal_vec(dim),
                     rng.normal_vec(dim), 1.0 / 32});
  Eigen::VectorXd grad(m.num_params());
  for (auto _ : state) {
    const double loss = loss_and_grad(m, terms, grad);
    benchmark::DoNotOptimize(loss);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(BM_LossAndGrad)->Arg(2)->Arg(8)->Arg(32);

void BM_DetectorUpdate(benchmark::State& state) {
  Rng rng(1, streams::kInit);
  const int dim = 8;
  const FlowModel m = make_model(dim, 4, rng);
  RegistryConfig rc;
  rc.classes_per_task = 2;
  rc.dim = dim;
  TaskRegistry registry(rc);
  Rng means(1, streams::kMeans);
  registry.spawn_task(means);
  DetectorConfig dc;
  Detector detector(dc);
  detector.activate_task(0);
  std::vector<Sample> batch;
  for (int i = 0; i < 32; ++i) batch.push_back({rng.normal_vec(dim), 0});
  for (auto _ : state) {
    const Decision d = detector.update_and_check(m, registry, batch);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_DetectorUpdate);

}  // namespace

BENCHMARK_MAIN();
