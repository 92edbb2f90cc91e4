#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "tsm/market.hpp"

namespace tsm {

// scale * sqrt(ln(log_arg) / (2 count)); +inf when count == 0.
double hoeffding_bonus(std::size_t count, double log_arg, double scale = 1.0);

// I(s <= U <= max{q_k, b̲}) I(b̄ >= q_k) from a round played at (U, U).
// Throws ContractViolation unless fb.reserve == U.
int gft1_indicator_sbb(double U, double q_k, const StageOneFeedback& fb, bool seller_bit);

// I(s <= U <= p) I(b̄ >= q) from a round played at (U, 0).
// Throws ContractViolation unless fb.reserve == 0.
int gft1_indicator_gbb(double U, double p, double q, const StageOneFeedback& fb, bool seller_bit);

// (b̄ - p) I(b̄ >= q') I(s <= p) for the played seller price p. Throws
// FeedbackUnavailable when q' < played_q.
double gft2_realization(double p, double q_prime, const StageOneFeedback& fb, bool seller_bit, double played_q);

// The SBB form with p = max{q, b̲}, available for the played reserve only.
double gft2_realization_sbb(double q, const StageOneFeedback& fb, bool seller_bit);

// Full-feedback table: every element observed each exploration round.
class Gft1Table {
 public:
  explicit Gft1Table(std::size_t size = 0) : sums_(size, 0.0) {}
  void add_round(const std::vector<int>& indicators);
  void add(std::size_t i, double x) { sums_[i] += x; }
  void finish_round() { ++count_; }
  std::size_t size() const { return sums_.size(); }
  std::size_t count() const { return count_; }
  double mean(std::size_t i) const { return count_ ? sums_[i] / static_cast<double>(count_) : 0.0; }
  double upper(std::size_t i, double log_arg, double scale = 1.0) const {
    return mean(i) + hoeffding_bonus(count_, log_arg, scale);
  }
  void dump_csv(std::ostream& os, const std::vector<double>& labels, double log_arg, double scale = 1.0) const;

 private:
  std::vector<double> sums_;
  std::size_t count_ = 0;
};

// Partial-feedback table with per-element counts.
class Gft2Table {
 public:
  explicit Gft2Table(std::size_t size = 0) : sums_(size, 0.0), counts_(size, 0) {}
  void add(std::size_t i, double x) {
    sums_[i] += x;
    ++counts_[i];
  }
  std::size_t size() const { return sums_.size(); }
  std::size_t count(std::size_t i) const { return counts_[i]; }
  double mean(std::size_t i) const { return counts_[i] ? sums_[i] / static_cast<double>(counts_[i]) : 0.0; }
  double upper(std::size_t i, double log_arg, double scale = 1.0) const {
    return mean(i) + hoeffding_bonus(counts_[i], log_arg, scale);
  }
  void dump_csv(std::ostream& os, const std::vector<double>& labels, double log_arg, double scale = 1.0) const;

 private:
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

}  // namespace tsm
