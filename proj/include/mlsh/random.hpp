#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mlsh {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent sub-stream seed for (base, a, b). Used for per-repetition,
// per-slot and per-batch streams so results never depend on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

// Seeded generator built only on std::mt19937_64's raw output, whose sequence
// is fixed by the standard. std::normal_distribution is implementation
// defined, so Gaussians come from our own Box-Muller transform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gaussian();

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<double> random_gaussian_vector(Rng& rng, std::size_t dim);
std::vector<double> random_unit_vector(Rng& rng, std::size_t dim);

}  // namespace mlsh
