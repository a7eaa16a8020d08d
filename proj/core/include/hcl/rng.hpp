#pragma once

#include <cstdint>
#include <Eigen/Dense>

namespace hcl {

/// Counter-based pseudo-random generator.
///
/// Each draw hashes (key, counter) through the splitmix64 finalizer, where
/// the key is derived from the user seed and a stream label. Streams with
/// distinct labels are statistically independent and never interleave;
/// substream() derives further independent generators (one per worker or
/// per purpose) without touching the parent's counter.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint32_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller (second value cached).
  double normal();

  Eigen::VectorXd normal_vec(int n);

  /// Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  /// Independent generator derived from this one's key and a label.
  Rng substream(std::uint32_t label) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Well-known stream labels so the major consumers never collide.
namespace streams {
inline constexpr std::uint32_t kData = 1;
inline constexpr std::uint32_t kMeans = 2;
inline constexpr std::uint32_t kReplay = 3;
inline constexpr std::uint32_t kShuffle = 4;
inline constexpr std::uint32_t kInit = 5;
}  // namespace streams

}  // namespace hcl
