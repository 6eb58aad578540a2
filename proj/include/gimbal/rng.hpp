#pragma once

#include <cstdint>
#include <random>

namespace gimbal::rng {

/// SplitMix64 step; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Named substreams so that e.g. noise draws never shift location draws.
enum class Stream : std::uint64_t { locations = 1, covariates = 2, noise = 3, split = 4 };

/// mt19937_64 seeded from SplitMix64(seed, stream). Uniforms take the top 53
/// bits; normals use the Marsaglia polar method. Both are fully specified
/// here so output does not depend on the standard library's distributions.
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream);

  double uniform01();                       // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  double normal();                          // N(0, 1)
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gimbal::rng
