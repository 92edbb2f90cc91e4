#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <json.hpp>

#include "tsm/market.hpp"

namespace tsm {

struct PartitionResult {
  std::vector<double> points;
  bool empty_sample = false;  // B was empty and {0, 1} was returned
};

// Starting from p_0 = 0, repeatedly takes the largest q in B with q > p_k and
// at most |B|/K samples strictly inside (p_k, q); emits 1 when no sample lies
// above p_k. Runs at most K steps. Throws ContractViolation for K < 1.
PartitionResult partition_multiset(std::vector<double> samples, std::size_t K);

// {n/K : n = 0..K}
std::vector<double> uniform_grid(std::size_t K);

// Sorted union of two point sets without duplicates.
std::vector<double> merge_grids(const std::vector<double>& a, const std::vector<double>& b);

struct SbbGrid {
  std::vector<double> points;
};

struct GbbGrid {
  std::vector<double> seller;  // B^S
  std::vector<double> buyer;   // B^B
};

enum class GridMode { Sbb, Gbb };

struct GridOptions {
  std::size_t K = 1;
  bool sbb_union_uniform = true;
  double delta = 0.05;  // recorded only
};

SbbGrid make_sbb_grid(const std::vector<double>& top_bids, const GridOptions& opts);
GbbGrid make_gbb_grid(const std::vector<double>& top_bids, const GridOptions& opts);

struct GridEstimate {
  SbbGrid sbb;
  GbbGrid gbb;
  std::vector<double> top_bids;
  std::vector<GftRev> log;  // realized (gft, revenue) per sampling round
  bool empty_sample = false;
};

// Plays T0 rounds of (q = 0, p = b̲) against profiles drawn from `next` and
// builds the grid for the requested mode.
GridEstimate estimate_grid(GridMode mode, std::size_t T0, const GridOptions& opts,
                           const std::function<ValuationProfile()>& next);

// F_K: (p, p + 2^-j) for p in B^S while p + 2^-j <= 1, and the outcome-
// dependent (max{q, b̲} - 2^-j, q) for q in B^B, for j = 1..ceil(log2 T).
// Throws ContractViolation for T < 2.
std::vector<Mechanism> build_fk(const std::vector<double>& seller_grid, const std::vector<double>& buyer_grid,
                                std::size_t T);

std::size_t ceil_log2(std::size_t T);

nlohmann::json to_json(const GbbGrid& g);
nlohmann::json to_json(const Mechanism& m);

}  // namespace tsm
