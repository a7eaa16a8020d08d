#include <doctest.h>

#include <cmath>

#include "hcl/adam.hpp"
#include "hcl/numdiff.hpp"
#include "hcl/replay.hpp"
#include "hcl/rng.hpp"

using hcl::FlowConfig;
using hcl::FlowModel;
using hcl::RegistryConfig;
using hcl::Rng;
using hcl::Snapshot;
using hcl::TaskRegistry;

namespace {

struct Fixture {
  FlowModel model;
  TaskRegistry registry;
};

Fixture make_fixture(int dim, int tasks, Rng& rng, double warp = 0.0) {
  FlowConfig fc;
  fc.dim = dim;
  fc.num_layers = 2;
  fc.hidden = {8};
  FlowModel m = FlowModel::create(fc, rng);
  if (warp != 0.0) {
    Eigen::VectorXd theta = m.get_params();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      theta[i] += warp * rng.normal();
    }
    m.set_params(theta);
  }
  RegistryConfig rc;
  rc.classes_per_task = 2;
  rc.dim = dim;
  rc.mean_scale = 3.0;
  TaskRegistry reg(rc);
  for (int t = 0; t < tasks; ++t) reg.spawn_task(rng);
  return {std::move(m), std::move(reg)};
}

}  // namespace

TEST_CASE("snapshot is immutable under further training of the live model") {
  Rng rng(1);
  auto [model, registry] = make_fixture(2, 2, rng);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0, 1});
  const Eigen::VectorXd frozen = snap.model.get_params();

  Eigen::VectorXd theta = model.get_params();
  theta.array() += 0.5;
  model.set_params(theta);
  CHECK(snap.model.get_params() == frozen);
  CHECK_THROWS_AS(hcl::take_snapshot(model, registry, {}),
                  std::invalid_argument);
}

TEST_CASE("draw_replay is stratified over covered tasks") {
  Rng rng(2);
  auto [model, registry] = make_fixture(2, 2, rng);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0, 1});
  Rng draw(7);
  const auto replay = hcl::draw_replay(snap, draw, 32);
  CHECK(replay.size() == 64);
  int c0 = 0, c1 = 0;
  for (const auto& r : replay) {
    CHECK((r.t == 0 || r.t == 1));
    (r.t == 0 ? c0 : c1)++;
  }
  CHECK(c0 == 32);
  CHECK(c1 == 32);
}

TEST_CASE("draw_replay class frequencies are uniform") {
  Rng rng(3);
  auto [model, registry] = make_fixture(2, 1, rng);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0});
  Rng draw(8);
  const auto replay = hcl::draw_replay(snap, draw, 10000);
  int c0 = 0;
  for (const auto& r : replay) {
    if (r.y == 0) ++c0;
  }
  // Binomial 3-sigma around n/2.
  const double sigma = std::sqrt(10000 * 0.25);
  CHECK(std::abs(c0 - 5000) < 3 * sigma);
}

TEST_CASE("draw_replay is deterministic given (snapshot, seed)") {
  Rng rng(4);
  auto [model, registry] = make_fixture(2, 2, rng, 0.2);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0, 1});
  Rng d1(9), d2(9);
  const auto a = hcl::draw_replay(snap, d1, 8);
  const auto b = hcl::draw_replay(snap, d2, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }
}

TEST_CASE("gr_loss at the mode of an identity model") {
  Rng rng(5);
  auto [model, registry] = make_fixture(2, 1, rng);
  std::vector<hcl::ReplayItem> replay;
  replay.push_back({registry.mean(0, 0), 0, 0});
  replay.push_back({registry.mean(1, 0), 1, 0});
  CHECK(hcl::gr_loss(model, registry, replay) ==
        doctest::Approx(std::log(2 * M_PI)).epsilon(1e-12));
}

TEST_CASE("gr_loss on the snapshot's own samples is finite") {
  Rng rng(6);
  auto [model, registry] = make_fixture(2, 2, rng, 0.2);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0, 1});
  Rng draw(10);
  const auto replay = hcl::draw_replay(snap, draw, 16);
  CHECK(std::isfinite(hcl::gr_loss(snap.model, snap.registry, replay)));
}

TEST_CASE("fr_loss is zero iff the maps agree, nonnegative otherwise") {
  Rng rng(7);
  auto [model, registry] = make_fixture(2, 1, rng, 0.2);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0});
  Rng draw(11);
  const auto replay = hcl::draw_replay(snap, draw, 16);
  CHECK(hcl::fr_loss(model, snap, replay) == 0.0);

  // Any single-parameter perturbation that changes outputs breaks equality.
  Eigen::VectorXd theta = model.get_params();
  FlowModel perturbed = model;
  // Perturb the shift bias of the last layer's unmasked coordinate; it
  // reaches the output directly.
  theta[model.num_params() - 2] += 0.1;
  perturbed.set_params(theta);
  CHECK(hcl::fr_loss(perturbed, snap, replay) > 0.0);
}

TEST_CASE("fr_loss gradient vanishes at theta = snapshot theta") {
  Rng rng(8);
  auto [model, registry] = make_fixture(2, 1, rng, 0.2);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0});
  Rng draw(12);
  const auto replay = hcl::draw_replay(snap, draw, 4);

  std::vector<hcl::LossTerm> terms;
  hcl::append_fr_terms(snap, replay, terms);
  Eigen::VectorXd grad;
  (void)hcl::loss_and_grad(model, terms, grad);
  CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-10);

  const Eigen::VectorXd theta = model.get_params();
  FlowModel probe = model;
  auto f = [&](const Eigen::VectorXd& th) {
    probe.set_params(th);
    return hcl::fr_loss(probe, snap, replay);
  };
  const Eigen::VectorXd fd = hcl::finite_diff_grad(f, theta, 1e-5);
  CHECK(fd.lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("gr_loss descends under its own gradient steps") {
  Rng rng(9);
  auto [model, registry] = make_fixture(2, 1, rng, 0.3);
  const Snapshot snap = hcl::take_snapshot(model, registry, {0});
  Rng draw(13);
  const auto replay = hcl::draw_replay(snap, draw, 32);

  // Perturb away from the snapshot, then descend on gr_loss alone.
  Eigen::VectorXd theta = model.get_params();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta[i] += 0.05 * rng.normal();
  }
  model.set_params(theta);
  auto adam = hcl::AdamState::create(model.num_params());

  std::vector<hcl::LossTerm> terms;
  hcl::append_gr_terms(model, registry, replay, terms);
  double prev = hcl::gr_loss(model, registry, replay);
  const double first = prev;
  double last = prev;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd grad;
    (void)hcl::loss_and_grad(model, terms, grad);
    hcl::adam_step_inplace(theta, grad, adam);
    model.set_params(theta);
    last = hcl::gr_loss(model, registry, replay);
  }
  CHECK(last < first + 1e-6);
}
