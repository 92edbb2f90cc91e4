#include "tsm/gft_estimation.hpp"

#include <cmath>
#include <limits>

#include "tsm/error.hpp"

namespace tsm {

double hoeffding_bonus(std::size_t count, double log_arg, double scale) {
  if (count == 0) return std::numeric_limits<double>::infinity();
  return scale * std::sqrt(std::log(log_arg) / (2.0 * static_cast<double>(count)));
}

int gft1_indicator_sbb(double U, double q_k, const StageOneFeedback& fb, bool seller_bit) {
  if (fb.reserve != U) throw ContractViolation("GFT1 indicator needs a round played with reserve U");
  if (!seller_bit) return 0;
  if (q_k >= U) {
    // U <= q_k <= max{q_k, b̲} always; need b̄ >= q_k, visible since q_k >= U.
    return fb.any_at_least(q_k) ? 1 : 0;
  }
  // q_k < U: U <= max{q_k, b̲} iff b̲ >= U, i.e. two bids revealed; then b̄ >= q_k.
  return fb.count() >= 2 ? 1 : 0;
}

int gft1_indicator_gbb(double U, double p, double q, const StageOneFeedback& fb, bool seller_bit) {
  if (fb.reserve != 0.0) throw ContractViolation("GFT1 indicator needs a round played with reserve 0");
  if (!seller_bit || U > p) return 0;
  return fb.any_at_least(q) ? 1 : 0;
}

double gft2_realization(double p, double q_prime, const StageOneFeedback& fb, bool seller_bit, double played_q) {
  if (q_prime < played_q) throw FeedbackUnavailable("reserve below the played one is not observed");
  if (!seller_bit) return 0.0;
  auto hi = fb.highest();
  if (!hi || *hi < q_prime) return 0.0;
  return *hi - p;
}

double gft2_realization_sbb(double q, const StageOneFeedback& fb, bool seller_bit) {
  if (fb.reserve != q) throw FeedbackUnavailable("SBB realization only for the played reserve");
  return gft2_realization(sbb_seller_price(q, fb), q, fb, seller_bit, q);
}

void Gft1Table::add_round(const std::vector<int>& indicators) {
  if (indicators.size() != sums_.size()) throw ContractViolation("indicator vector size mismatch");
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += indicators[i];
  ++count_;
}

void Gft1Table::dump_csv(std::ostream& os, const std::vector<double>& labels, double log_arg, double scale) const {
  os << "element,count,mean,bonus\n";
  for (std::size_t i = 0; i < sums_.size(); ++i)
    os << labels.at(i) << ',' << count_ << ',' << mean(i) << ',' << hoeffding_bonus(count_, log_arg, scale) << '\n';
}

void Gft2Table::dump_csv(std::ostream& os, const std::vector<double>& labels, double log_arg, double scale) const {
  os << "element,count,mean,bonus\n";
  for (std::size_t i = 0; i < sums_.size(); ++i)
    os << labels.at(i) << ',' << counts_[i] << ',' << mean(i) << ',' << hoeffding_bonus(counts_[i], log_arg, scale)
       << '\n';
}

}  // namespace tsm
