#include "folavg/rng.hpp"

#include <array>
#include <cmath>

namespace folavg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t path_index,
                              std::uint64_t subsequence) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ path_index);
  h = splitmix64(h ^ (subsequence * 0xd1b54a32d192ed03ULL));
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    h = splitmix64(h);
    words[i] = static_cast<std::uint32_t>(h);
    words[i + 1] = static_cast<std::uint32_t>(h >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t path_index, std::uint64_t subsequence)
    : engine_(seeded_engine(master_seed, path_index, subsequence)) {}

Vec3 brownian_increment(RngStream& rng, double dt) {
  if (!(dt >= 0.0)) throw std::invalid_argument("brownian_increment: dt must be non-negative");
  const double s = std::sqrt(dt);
  const double a = rng.normal();
  const double b = rng.normal();
  const double c = rng.normal();
  return Vec3(s * a, s * b, s * c);
}

}  // namespace folavg
