#pragma once

#include <cstddef>
#include <vector>

#include "tsm/gft_estimation.hpp"
#include "tsm/grid.hpp"
#include "tsm/learner.hpp"
#include "tsm/rng.hpp"

namespace tsm {

struct SbbParams {
  std::size_t T = 0;
  std::size_t T0 = 0;  // 0: ceil(T^{2/3})
  std::size_t K = 0;   // 0: ceil(T^{1/3})
  double delta = 0.05;
  bool sbb_union_uniform = true;
  double gft1_scale = 1.0;
  double gft2_scale = 1.0;
};

// Grid estimation (T0 rounds), uniform-price exploration of GFT1 (T0 rounds),
// then optimistic SBB reserves for the rest of the horizon.
class SbbLearner final : public Learner {
 public:
  // Throws ConfigError when the horizon cannot fit both T0-round phases.
  SbbLearner(const SbbParams& params, Rng rng);

  Mechanism act() override;
  void observe(const Observation& obs) override;
  Phase phase() const override;
  std::size_t round() const override { return t_; }
  std::size_t horizon() const override { return params_.T; }

  const SbbParams& params() const { return params_; }
  const std::vector<double>& grid() const { return grid_.points; }
  const std::vector<double>& top_bids() const { return top_bids_; }
  const Gft1Table& gft1() const { return gft1_; }
  const Gft2Table& gft2() const { return gft2_; }
  double gft1_upper(std::size_t k) const;
  double gft2_upper(std::size_t k) const;
  // Index of the reserve the UCB rule would play now.
  std::size_t select() const;

 private:
  SbbParams params_;
  Rng rng_;
  std::size_t t_ = 0;
  bool awaiting_ = false;
  double u_ = 0.0;
  std::size_t played_ = 0;
  std::vector<double> top_bids_;
  SbbGrid grid_;
  Gft1Table gft1_;
  Gft2Table gft2_;
  double log_arg_ = 0.0;
  std::vector<int> indicators_;
};

}  // namespace tsm
