#include "hcl/rng.hpp"

#include <cmath>

namespace hcl {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint32_t stream)
    : seed_(seed),
      key_(splitmix64(splitmix64(seed) ^ (0x5851f42d4c957f2dULL * (stream + 1)))) {}

std::uint64_t Rng::next_u64() {
  return splitmix64(key_ ^ (0x9e3779b97f4a7c15ULL * ++counter_));
}

double Rng::uniform() {
  // 53 random bits into [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd Rng::normal_vec(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

int Rng::uniform_int(int n) {
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

Rng Rng::substream(std::uint32_t label) const {
  Rng r(0, 0);
  r.seed_ = seed_;
  r.key_ = splitmix64(key_ ^ (0xd1342543de82ef95ULL * (label + 1)));
  r.counter_ = 0;
  r.has_cached_ = false;
  return r;
}

}  // namespace hcl
