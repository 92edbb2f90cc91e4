#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "tsm/market.hpp"

namespace tsm {

enum class Phase { Grid, Explore, Ucb, MaxRev, Saep, Fallback };

const char* phase_name(Phase p);

// What a learner is allowed to see after a round.
struct Observation {
  const StageOneFeedback* feedback = nullptr;
  bool seller_bit = false;
  double reserve = 0.0;
  double seller_price = 0.0;
};

inline Observation observation_of(const RoundResult& r) {
  return {&r.feedback, r.seller_bit, r.reserve, r.seller_price};
}

// act() and observe() strictly alternate; act() throws HorizonExhausted past T.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual Mechanism act() = 0;
  virtual void observe(const Observation& obs) = 0;
  virtual Phase phase() const = 0;
  virtual std::size_t round() const = 0;  // rounds completed
  virtual std::size_t horizon() const = 0;
  // Surviving arms of the constrained bandit; 0 when not applicable.
  virtual std::size_t safe_set_size() const { return 0; }
};

// ceil(T^{2/3}) and ceil(T^{1/3}), robust to pow rounding.
inline std::size_t default_t0(std::size_t T) {
  return static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(T)) * std::cbrt(static_cast<double>(T)) - 1e-9));
}
inline std::size_t default_k(std::size_t T) {
  return static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(T)) - 1e-9));
}

}  // namespace tsm
