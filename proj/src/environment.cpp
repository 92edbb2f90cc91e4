#include "tsm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsm/error.hpp"

namespace tsm {

namespace {

constexpr double kProbTol = 1e-12;

std::vector<double> cumulate(const std::vector<double>& probs) {
  std::vector<double> c(probs.size());
  std::partial_sum(probs.begin(), probs.end(), c.begin());
  return c;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  // Scaling by the total keeps the last atom reachable despite rounding.
  double x = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

// Neumaier summation: large supports would otherwise drift past the tolerance.
template <class It, class F>
double stable_sum(It first, It last, F f) {
  double total = 0.0, comp = 0.0;
  for (; first != last; ++first) {
    double x = f(*first);
    double t = total + x;
    comp += std::fabs(total) >= std::fabs(x) ? (total - t) + x : (x - t) + total;
    total = t;
  }
  return total + comp;
}

void check_probs(const std::vector<double>& probs, const char* what) {
  if (probs.empty()) throw ValidationError(std::string(what) + ": no atoms");
  for (double p : probs)
    if (!(p >= 0.0)) throw ValidationError(std::string(what) + ": negative probability");
  double total = stable_sum(probs.begin(), probs.end(), [](double p) { return p; });
  if (std::fabs(total - 1.0) > kProbTol)
    throw ValidationError(std::string(what) + ": probabilities sum to " + std::to_string(total));
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

double binomial_tail(int n, int k, double x) {
  // P(Bin(n, x) >= k)
  double total = 0.0;
  for (int i = k; i <= n; ++i) {
    double logc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    double term = std::exp(logc) * std::pow(x, i) * std::pow(1.0 - x, n - i);
    total += term;
  }
  return total;
}

double beta_cdf(int a, int b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return binomial_tail(a + b - 1, a, x);
}

double beta_max_density(int a, int b) {
  if (a == 1 && b == 1) return 1.0;
  if (a == 1) return b;
  if (b == 1) return a;
  double mode = (a - 1.0) / (a + b - 2.0);
  double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(log_norm + (a - 1) * std::log(mode) + (b - 1) * std::log1p(-mode));
}

// Integral of (2x - 1) over [lo, hi].
double centered_integral(double lo, double hi) { return (hi * hi - hi) - (lo * lo - lo); }

}  // namespace

Dist1D Dist1D::point(double v) {
  if (!in_unit(v)) throw ValidationError("point mass outside [0,1]");
  Dist1D d;
  d.kind_ = Kind::Point;
  d.a_ = d.b_ = v;
  return d;
}

Dist1D Dist1D::uniform(double lo, double hi) {
  if (!(in_unit(lo) && in_unit(hi) && lo < hi)) throw ValidationError("uniform bounds must satisfy 0 <= lo < hi <= 1");
  Dist1D d;
  d.kind_ = Kind::Uniform;
  d.a_ = lo;
  d.b_ = hi;
  return d;
}

Dist1D Dist1D::beta(int a, int b) {
  if (a < 1 || b < 1) throw ValidationError("beta shape parameters must be integers >= 1");
  Dist1D d;
  d.kind_ = Kind::Beta;
  d.ia_ = a;
  d.ib_ = b;
  d.a_ = 0.0;
  d.b_ = 1.0;
  return d;
}

Dist1D Dist1D::discrete(std::vector<double> values, std::vector<double> probs) {
  if (values.size() != probs.size()) throw ValidationError("discrete marginal: size mismatch");
  check_probs(probs, "discrete marginal");
  for (double v : values)
    if (!in_unit(v)) throw ValidationError("discrete marginal: value outside [0,1]");
  Dist1D d;
  d.kind_ = Kind::Discrete;
  d.cumulative_ = cumulate(probs);
  d.values_ = std::move(values);
  d.probs_ = std::move(probs);
  return d;
}

double Dist1D::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::Point:
      return a_;
    case Kind::Uniform:
      return rng.uniform(a_, b_);
    case Kind::Beta: {
      // a-th smallest of a+b-1 uniforms.
      int n = ia_ + ib_ - 1;
      double buf[64];
      std::vector<double> big;
      double* u = buf;
      if (n > 64) {
        big.resize(n);
        u = big.data();
      }
      for (int i = 0; i < n; ++i) u[i] = rng.uniform();
      std::nth_element(u, u + (ia_ - 1), u + n);
      return u[ia_ - 1];
    }
    case Kind::Discrete:
      return values_[pick(cumulative_, rng.uniform())];
  }
  return 0.0;
}

double Dist1D::mass(double lo, double hi) const {
  switch (kind_) {
    case Kind::Uniform: {
      double l = std::max(lo, a_), h = std::min(hi, b_);
      return h > l ? (h - l) / (b_ - a_) : 0.0;
    }
    case Kind::Beta:
      return beta_cdf(ia_, ib_, hi) - beta_cdf(ia_, ib_, lo);
    default:
      throw ContractViolation("cell mass requested for an atomic marginal");
  }
}

std::optional<double> Dist1D::density_bound() const {
  switch (kind_) {
    case Kind::Uniform:
      return 1.0 / (b_ - a_);
    case Kind::Beta:
      return beta_max_density(ia_, ib_);
    default:
      return std::nullopt;
  }
}

MarketDistribution MarketDistribution::discrete(std::vector<Atom> atoms, std::string name,
                                                bool is_independent) {
  if (atoms.empty()) throw ValidationError("discrete distribution: no atoms");
  std::vector<double> probs;
  std::size_t n = atoms[0].profile.buyers.size();
  for (const auto& a : atoms) {
    try {
      validate(a.profile);
    } catch (const InvalidInput& e) {
      throw ValidationError(std::string("discrete distribution: ") + e.what());
    }
    if (a.profile.buyers.size() != n) throw ValidationError("discrete distribution: atoms differ in buyer count");
    probs.push_back(a.prob);
  }
  check_probs(probs, "discrete distribution");
  MarketDistribution d;
  DiscreteJoint dj;
  dj.cumulative = cumulate(probs);
  dj.atoms = std::move(atoms);
  d.rep_ = std::move(dj);
  d.n_buyers_ = n;
  d.name_ = std::move(name);
  d.is_independent_ = is_independent;
  return d;
}

MarketDistribution MarketDistribution::independent(Dist1D seller, std::vector<Dist1D> buyers, std::string name) {
  if (buyers.empty()) throw ValidationError("independent distribution: no buyers");
  MarketDistribution d;
  d.n_buyers_ = buyers.size();
  std::optional<double> m = seller.density_bound();
  for (const auto& b : buyers) {
    auto mb = b.density_bound();
    m = (m && mb) ? std::optional<double>(*m * *mb) : std::nullopt;
  }
  d.density_bound_ = m;
  d.rep_ = IndependentProduct{std::move(seller), std::move(buyers)};
  d.name_ = std::move(name);
  d.is_independent_ = true;
  return d;
}

MarketDistribution MarketDistribution::uniform_product(std::size_t n_buyers) {
  if (n_buyers == 0) throw ValidationError("uniform product: no buyers");
  MarketDistribution d;
  BoundedDensity bd;
  bd.family = BoundedDensity::Family::UniformProduct;
  bd.n_buyers = n_buyers;
  d.rep_ = bd;
  d.n_buyers_ = n_buyers;
  d.name_ = "uniform_product";
  d.is_independent_ = true;
  d.density_bound_ = 1.0;
  return d;
}

MarketDistribution MarketDistribution::beta_product(std::pair<int, int> seller,
                                                    std::vector<std::pair<int, int>> buyers) {
  if (buyers.empty()) throw ValidationError("beta product: no buyers");
  MarketDistribution d;
  BoundedDensity bd;
  bd.family = BoundedDensity::Family::BetaProduct;
  bd.n_buyers = buyers.size();
  bd.beta_params.push_back(seller);
  for (auto& b : buyers) bd.beta_params.push_back(b);
  double m = 1.0;
  for (auto [a, b] : bd.beta_params) {
    if (a < 1 || b < 1) throw ValidationError("beta shape parameters must be integers >= 1");
    m *= beta_max_density(a, b);
  }
  d.rep_ = bd;
  d.n_buyers_ = buyers.size();
  d.name_ = "beta_product";
  d.is_independent_ = true;
  d.density_bound_ = m;
  return d;
}

MarketDistribution MarketDistribution::correlated_uniform(std::size_t n_buyers, double rho) {
  if (n_buyers == 0) throw ValidationError("correlated uniform: no buyers");
  if (!(rho >= -1.0 && rho <= 1.0)) throw ValidationError("correlated uniform: rho must lie in [-1,1]");
  MarketDistribution d;
  BoundedDensity bd;
  bd.family = BoundedDensity::Family::CorrelatedUniform;
  bd.n_buyers = n_buyers;
  bd.rho = rho;
  d.rep_ = bd;
  d.n_buyers_ = n_buyers;
  d.name_ = "correlated_uniform";
  d.is_independent_ = rho == 0.0;
  d.density_bound_ = 1.0 + std::fabs(rho);
  return d;
}

void MarketDistribution::sample_into(Rng& rng, ValuationProfile& out) const {
  out.buyers.resize(n_buyers_);
  if (auto* dj = std::get_if<DiscreteJoint>(&rep_)) {
    const auto& a = dj->atoms[pick(dj->cumulative, rng.uniform())].profile;
    out.seller = a.seller;
    std::copy(a.buyers.begin(), a.buyers.end(), out.buyers.begin());
  } else if (auto* ip = std::get_if<IndependentProduct>(&rep_)) {
    out.seller = ip->seller.sample(rng);
    for (std::size_t i = 0; i < n_buyers_; ++i) out.buyers[i] = ip->buyers[i].sample(rng);
  } else {
    const auto& bd = std::get<BoundedDensity>(rep_);
    switch (bd.family) {
      case BoundedDensity::Family::UniformProduct:
        out.seller = rng.uniform();
        for (auto& b : out.buyers) b = rng.uniform();
        break;
      case BoundedDensity::Family::BetaProduct:
        out.seller = Dist1D::beta(bd.beta_params[0].first, bd.beta_params[0].second).sample(rng);
        for (std::size_t i = 0; i < n_buyers_; ++i)
          out.buyers[i] = Dist1D::beta(bd.beta_params[i + 1].first, bd.beta_params[i + 1].second).sample(rng);
        break;
      case BoundedDensity::Family::CorrelatedUniform: {
        const double m = 1.0 + std::fabs(bd.rho);
        double s, b;
        do {
          s = rng.uniform();
          b = rng.uniform();
        } while (rng.uniform() * m >= 1.0 + bd.rho * (2 * s - 1) * (2 * b - 1));
        out.seller = s;
        out.buyers[0] = b;
        for (std::size_t i = 1; i < n_buyers_; ++i) out.buyers[i] = rng.uniform();
        break;
      }
    }
  }
}

ValuationProfile MarketDistribution::sample(Rng& rng) const {
  ValuationProfile p;
  sample_into(rng, p);
  return p;
}

const DiscreteJoint& MarketDistribution::as_discrete() const {
  if (auto* dj = std::get_if<DiscreteJoint>(&rep_)) return *dj;
  throw ContractViolation("distribution '" + name_ + "' has no finite support");
}

MarketDistribution MarketDistribution::discretized(std::size_t cells) const {
  if (cells == 0) throw ValidationError("lattice needs at least one cell per axis");
  const std::size_t dims = n_buyers_ + 1;
  const double h = 1.0 / static_cast<double>(cells);

  // Per-axis cell masses for product kinds; rho term handled separately.
  std::vector<std::vector<double>> axis(dims, std::vector<double>(cells));
  double rho = 0.0;
  if (auto* ip = std::get_if<IndependentProduct>(&rep_)) {
    for (std::size_t d = 0; d < dims; ++d) {
      const Dist1D& m = d == 0 ? ip->seller : ip->buyers[d - 1];
      if (m.kind() == Dist1D::Kind::Point || m.kind() == Dist1D::Kind::Discrete)
        throw ContractViolation("lattice discretization needs continuous marginals");
      for (std::size_t c = 0; c < cells; ++c) axis[d][c] = m.mass(c * h, (c + 1) * h);
    }
  } else if (auto* bd = std::get_if<BoundedDensity>(&rep_)) {
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::size_t c = 0; c < cells; ++c) {
        if (bd->family == BoundedDensity::Family::BetaProduct)
          axis[d][c] = Dist1D::beta(bd->beta_params[d].first, bd->beta_params[d].second).mass(c * h, (c + 1) * h);
        else
          axis[d][c] = h;
      }
    }
    if (bd->family == BoundedDensity::Family::CorrelatedUniform) rho = bd->rho;
  } else {
    throw ContractViolation("distribution is already discrete");
  }

  std::vector<Atom> atoms;
  std::vector<std::size_t> idx(dims, 0);
  while (true) {
    double w = 1.0;
    for (std::size_t d = 0; d < dims; ++d) w *= axis[d][idx[d]];
    if (rho != 0.0) {
      double extra = rho * centered_integral(idx[0] * h, (idx[0] + 1) * h) *
                     centered_integral(idx[1] * h, (idx[1] + 1) * h);
      for (std::size_t d = 2; d < dims; ++d) extra *= axis[d][idx[d]];
      w += extra;
    }
    if (w > 0.0) {
      Atom a;
      a.prob = w;
      a.profile.seller = (idx[0] + 0.5) * h;
      for (std::size_t d = 1; d < dims; ++d) a.profile.buyers.push_back((idx[d] + 0.5) * h);
      atoms.push_back(std::move(a));
    }
    std::size_t d = 0;
    while (d < dims && ++idx[d] == cells) idx[d++] = 0;
    if (d == dims) break;
  }
  // Cell masses come from differences of CDFs; renormalize away the rounding.
  double total = stable_sum(atoms.begin(), atoms.end(), [](const Atom& a) { return a.prob; });
  for (auto& a : atoms) a.prob /= total;
  auto out = discrete(std::move(atoms), name_ + "_lattice" + std::to_string(cells), is_independent_);
  out.density_bound_ = density_bound_;
  return out;
}

std::optional<MarketDistribution> MarketDistribution::to_discrete() const {
  if (is_discrete()) return *this;
  auto* ip = std::get_if<IndependentProduct>(&rep_);
  if (!ip) return std::nullopt;
  std::vector<const Dist1D*> margs{&ip->seller};
  for (const auto& b : ip->buyers) margs.push_back(&b);
  std::vector<std::vector<double>> vals, probs;
  for (const Dist1D* m : margs) {
    if (m->kind() == Dist1D::Kind::Point) {
      vals.push_back({m->lo()});
      probs.push_back({1.0});
    } else if (m->kind() == Dist1D::Kind::Discrete) {
      vals.push_back(m->values());
      probs.push_back(m->probs());
    } else {
      return std::nullopt;
    }
  }
  std::vector<Atom> atoms;
  std::vector<std::size_t> idx(margs.size(), 0);
  while (true) {
    Atom a;
    a.prob = 1.0;
    for (std::size_t d = 0; d < margs.size(); ++d) {
      a.prob *= probs[d][idx[d]];
      if (d == 0)
        a.profile.seller = vals[d][idx[d]];
      else
        a.profile.buyers.push_back(vals[d][idx[d]]);
    }
    atoms.push_back(std::move(a));
    std::size_t d = 0;
    while (d < margs.size() && ++idx[d] == vals[d].size()) idx[d++] = 0;
    if (d == margs.size()) break;
  }
  double total = stable_sum(atoms.begin(), atoms.end(), [](const Atom& a) { return a.prob; });
  for (auto& a : atoms) a.prob /= total;
  return discrete(std::move(atoms), name_, true);
}

MarketDistribution MarketDistribution::empirical_proxy(std::size_t n, Rng& rng) const {
  if (n == 0) throw ContractViolation("empirical proxy needs at least one sample");
  std::vector<Atom> atoms(n);
  for (auto& a : atoms) {
    a.profile = sample(rng);
    a.prob = 1.0 / static_cast<double>(n);
  }
  auto out = discrete(std::move(atoms), name_ + "_empirical", is_independent_);
  out.density_bound_ = density_bound_;
  return out;
}

MarketDistribution needle_instance(double x, double eps) {
  if (!(x > 7.0 / 16.0 && x < 9.0 / 16.0)) throw ValidationError("needle: x must lie in (7/16, 9/16)");
  if (!(eps > 0.0 && eps < 1.0 / 16.0)) throw ValidationError("needle: eps must lie in (0, 1/16)");
  const double third = 1.0 / 3.0;
  std::vector<Atom> atoms{
      {{{0.75, 0.0}, x - eps}, third},
      {{{0.25, 0.0}, x + eps}, third},
      {{{0.25, 0.0}, 0.0}, 1.0 - 2.0 * third},
  };
  return MarketDistribution::discrete(std::move(atoms), "needle");
}

// ---- JSON ----

namespace {

nlohmann::json dist1d_to_json(const Dist1D& d) {
  switch (d.kind()) {
    case Dist1D::Kind::Point:
      return {{"type", "point"}, {"value", d.lo()}};
    case Dist1D::Kind::Uniform:
      return {{"type", "uniform"}, {"lo", d.lo()}, {"hi", d.hi()}};
    case Dist1D::Kind::Beta:
      return {{"type", "beta"}, {"a", d.beta_a()}, {"b", d.beta_b()}};
    case Dist1D::Kind::Discrete:
      return {{"type", "discrete"}, {"values", d.values()}, {"probs", d.probs()}};
  }
  return {};
}

Dist1D dist1d_from_json(const nlohmann::json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "point") return Dist1D::point(j.at("value").get<double>());
  if (type == "uniform") return Dist1D::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  if (type == "beta") return Dist1D::beta(j.at("a").get<int>(), j.at("b").get<int>());
  if (type == "discrete")
    return Dist1D::discrete(j.at("values").get<std::vector<double>>(), j.at("probs").get<std::vector<double>>());
  throw ValidationError("unknown marginal type '" + type + "'");
}

}  // namespace

nlohmann::json MarketDistribution::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  if (auto* dj = std::get_if<DiscreteJoint>(&rep_)) {
    j["kind"] = "discrete";
    j["independent"] = is_independent_;
    if (density_bound_) j["density_bound"] = *density_bound_;
    auto& atoms = j["atoms"] = nlohmann::json::array();
    for (const auto& a : dj->atoms) atoms.push_back({a.profile.seller, a.profile.buyers, a.prob});
  } else if (auto* ip = std::get_if<IndependentProduct>(&rep_)) {
    j["kind"] = "independent";
    j["seller"] = dist1d_to_json(ip->seller);
    auto& b = j["buyers"] = nlohmann::json::array();
    for (const auto& m : ip->buyers) b.push_back(dist1d_to_json(m));
  } else {
    const auto& bd = std::get<BoundedDensity>(rep_);
    j["kind"] = "bounded_density";
    j["n"] = bd.n_buyers;
    switch (bd.family) {
      case BoundedDensity::Family::UniformProduct:
        j["family"] = "uniform_product";
        break;
      case BoundedDensity::Family::BetaProduct: {
        j["family"] = "beta_product";
        j["seller_beta"] = {bd.beta_params[0].first, bd.beta_params[0].second};
        auto& b = j["buyer_beta"] = nlohmann::json::array();
        for (std::size_t i = 1; i < bd.beta_params.size(); ++i)
          b.push_back({bd.beta_params[i].first, bd.beta_params[i].second});
        break;
      }
      case BoundedDensity::Family::CorrelatedUniform:
        j["family"] = "correlated_uniform";
        j["rho"] = bd.rho;
        break;
    }
    j["density_bound"] = *density_bound_;
  }
  return j;
}

MarketDistribution MarketDistribution::from_json(const nlohmann::json& j) {
  try {
    std::string kind = j.at("kind").get<std::string>();
    std::optional<MarketDistribution> d;
    if (kind == "discrete") {
      std::vector<Atom> atoms;
      for (const auto& a : j.at("atoms")) {
        if (!a.is_array() || a.size() != 3) throw ValidationError("atom must be [s, [b1,...], prob]");
        Atom atom;
        atom.profile.seller = a[0].get<double>();
        atom.profile.buyers = a[1].get<std::vector<double>>();
        atom.prob = a[2].get<double>();
        atoms.push_back(std::move(atom));
      }
      d = discrete(std::move(atoms), j.value("name", std::string("discrete")), j.value("independent", false));
      if (j.contains("density_bound")) d->density_bound_ = j["density_bound"].get<double>();
    } else if (kind == "independent") {
      std::vector<Dist1D> buyers;
      for (const auto& b : j.at("buyers")) buyers.push_back(dist1d_from_json(b));
      d = independent(dist1d_from_json(j.at("seller")), std::move(buyers),
                      j.value("name", std::string("independent")));
    } else if (kind == "bounded_density") {
      std::string family = j.at("family").get<std::string>();
      std::size_t n = j.value("n", std::size_t{2});
      if (family == "uniform_product") {
        d = uniform_product(n);
      } else if (family == "beta_product") {
        auto s = j.at("seller_beta").get<std::pair<int, int>>();
        auto b = j.at("buyer_beta").get<std::vector<std::pair<int, int>>>();
        d = beta_product(s, std::move(b));
      } else if (family == "correlated_uniform") {
        d = correlated_uniform(n, j.at("rho").get<double>());
      } else {
        throw ValidationError("unknown bounded-density family '" + family + "'");
      }
      if (j.contains("name")) d->name_ = j["name"].get<std::string>();
    } else if (kind == "needle") {
      d = needle_instance(j.at("x").get<double>(), j.at("eps").get<double>());
    } else {
      throw ValidationError("unknown distribution kind '" + kind + "'");
    }
    if (j.contains("lattice")) d = d->discretized(j["lattice"].get<std::size_t>());
    return *d;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed distribution spec: ") + e.what());
  }
}

}  // namespace tsm
