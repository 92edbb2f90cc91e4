#pragma once

#include <cstdint>
#include <random>

namespace tsm {

// Seeded generator used everywhere in the project.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The engine seed is splitmix64(seed) xor splitmix64(stream + 1) so
// that independent consumers (environment draws, learner draws) can share one
// experiment seed without perturbing each other. Doubles are built from the top
// 53 bits, so streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stream ids used by the experiment harness.
inline constexpr std::uint64_t kEnvironmentStream = 0;
inline constexpr std::uint64_t kLearnerStream = 1;
inline constexpr std::uint64_t kOracleStream = 2;

}  // namespace tsm
