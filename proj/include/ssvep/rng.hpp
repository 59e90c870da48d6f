#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ssvep {

// Deterministic named-stream RNG. Every consumer derives its own stream as
// Rng(seed, "purpose"), so draw order in one module cannot perturb another.
// The generator is splitmix64 seeded with fnv1a64(purpose) mixed into the
// experiment seed; all distributions are built from raw u64 draws so results
// are identical across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view purpose);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; pairs are cached.
  double normal();
  double normal(double mean, double sigma);

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t fnv1a64(std::string_view s);

}  // namespace ssvep
