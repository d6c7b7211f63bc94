#pragma once

#include "folavg/types.hpp"

#include <cstdint>
#include <random>

namespace folavg {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Random stream for one path, derived deterministically from
/// (master_seed, path_index, subsequence). Identical triples reproduce the
/// same draws bit-exactly; distinct triples seed unrelated Mersenne Twister
/// states through a SplitMix64-hashed seed sequence.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t path_index, std::uint64_t subsequence = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Three independent N(0, dt) increments of the driving Brownian motion.
Vec3 brownian_increment(RngStream& rng, double dt);

}  // namespace folavg
