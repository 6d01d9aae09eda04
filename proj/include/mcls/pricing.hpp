#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/error.hpp"
#include "mcls/estimator.hpp"
#include "mcls/models.hpp"
#include "mcls/normal.hpp"
#include "mcls/sampling.hpp"
#include "mcls/solvers.hpp"

namespace mcls {

enum class PayoffKind { call_logprice, basket, rainbow_min_put, constant };

inline std::string to_string(PayoffKind k) {
  switch (k) {
    case PayoffKind::call_logprice: return "call";
    case PayoffKind::basket: return "basket";
    case PayoffKind::rainbow_min_put: return "rainbow";
    case PayoffKind::constant: return "constant";
  }
  return "?";
}

/// call: (e^x - e^k)^+ on the log-price x; basket: (sum w_i s_i - K)^+;
/// rainbow: (K - min_i s_i)^+; constant: c.
struct Payoff {
  PayoffKind kind = PayoffKind::call_logprice;
  double log_strike = 0.0;
  double strike = 1.0;
  std::vector<double> weights;

  static Payoff call_logprice(double k) {
    Payoff p;
    p.kind = PayoffKind::call_logprice;
    p.log_strike = k;
    return p;
  }
  static Payoff basket(std::vector<double> w, double k) {
    if (w.empty()) throw DomainError("basket needs at least one weight");
    for (double v : w)
      if (!(v >= 0.0)) throw DomainError("basket weights must be non-negative");
    Payoff p;
    p.kind = PayoffKind::basket;
    p.weights = std::move(w);
    p.strike = k;
    return p;
  }
  /// Equally weighted basket of d assets.
  static Payoff basket(std::size_t d, double k) { return basket(std::vector<double>(d, 1.0 / static_cast<double>(d)), k); }
  static Payoff rainbow_min_put(double k) {
    Payoff p;
    p.kind = PayoffKind::rainbow_min_put;
    p.strike = k;
    return p;
  }
  static Payoff constant(double c) {
    Payoff p;
    p.kind = PayoffKind::constant;
    p.strike = c;
    return p;
  }
};

inline double eval_payoff(const Payoff& p, std::span<const double> s) {
  if (s.empty()) throw DomainError("empty state");
  switch (p.kind) {
    case PayoffKind::call_logprice:
      if (s.size() != 1) throw DomainError("call payoff takes a scalar log-price");
      return std::max(std::exp(s[0]) - std::exp(p.log_strike), 0.0);
    case PayoffKind::basket: {
      if (s.size() != p.weights.size()) throw DomainError("basket weights do not match the state dimension");
      double b = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) b += p.weights[i] * s[i];
      return std::max(b - p.strike, 0.0);
    }
    case PayoffKind::rainbow_min_put:
      return std::max(p.strike - *std::min_element(s.begin(), s.end()), 0.0);
    case PayoffKind::constant:
      return p.strike;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Black-Scholes formulas

inline double bs_call_price(double s0, double k, double r, double sigma, double t) {
  if (!(s0 > 0.0 && k > 0.0 && t > 0.0 && sigma >= 0.0)) throw DomainError("invalid Black-Scholes inputs");
  const double df = std::exp(-r * t);
  if (sigma == 0.0) return std::max(s0 - k * df, 0.0);
  const double sq = sigma * std::sqrt(t);
  const double d1 = (std::log(s0 / k) + (r + 0.5 * sigma * sigma) * t) / sq;
  const double d2 = d1 - sq;
  return s0 * normal_cdf(d1) - k * df * normal_cdf(d2);
}

/// Volatility whose Black-Scholes call price equals `price`, by bisection.
inline double implied_vol(double price, double s0, double k, double r, double t) {
  if (!(s0 > 0.0 && k > 0.0 && t > 0.0)) throw DomainError("invalid Black-Scholes inputs");
  const double lower = std::max(s0 - k * std::exp(-r * t), 0.0);
  if (!(price > lower && price < s0)) {
    throw NoSolutionError("call price " + std::to_string(price) + " outside the no-arbitrage band (" +
                          std::to_string(lower) + ", " + std::to_string(s0) + ")");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (bs_call_price(s0, k, r, hi, t) < price) {
    hi *= 2.0;
    if (hi > 1e6) throw NoSolutionError("implied volatility does not fit in the search bracket");
  }
  while (hi - lo > 1e-14 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double pm = bs_call_price(s0, k, r, mid, t);
    if (pm == price) return mid;
    (pm < price ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Payoff at S^i = s0_i exp((r - sigma_i^2/2) T + sigma_i sqrt(T) (L Phi^{-1}(x))_i).
inline double bs_cube_integrand(const BlackScholesSpec& spec, const Payoff& payoff, double t,
                                std::span<const double> x) {
  if (x.size() != spec.d) throw DomainError("cube point dimension mismatch");
  thread_local std::vector<double> z;
  thread_local std::vector<double> s;
  z.resize(spec.d);
  s.resize(spec.d);
  for (std::size_t i = 0; i < spec.d; ++i) {
    if (!(x[i] > 0.0 && x[i] < 1.0)) throw DomainError("cube point must lie strictly inside (0,1)^d");
    z[i] = normal_quantile(x[i]);
  }
  gbm_sample_terminal(spec, t, z, s);
  return eval_payoff(payoff, s);
}

// ---------------------------------------------------------------------------
// Pricing

struct PriceReport {
  double price = 0.0;
  MclsEstimate estimate;
  std::optional<double> implied_vol;
  std::optional<double> reference_price;
  std::optional<double> abs_error;
  std::string basis_kind;
  std::string sampling;
};

struct PricingConfig {
  int degree = 5;
  std::size_t n_samples = 10000;
  std::size_t steps = 100;
  double maturity = 1.0;
  std::uint64_t seed = 0;
  EstimatorConfig estimator;
};

inline PolynomialDiffusion polynomial_diffusion(const HestonSpec& p) { return heston_diffusion(p); }
inline PolynomialDiffusion polynomial_diffusion(const JacobiSpec& p) { return jacobi_diffusion(p); }

/// Orthonormal polynomials in the log-price under the law of X_T, from the
/// moment formula.
template <StochasticVolSpec Spec>
BasisSet log_price_basis(const Spec& spec, int degree, double t) {
  const BasisSet raw = BasisSet::monomial(1, degree);
  return gram_schmidt(raw, log_price_oracle(polynomial_diffusion(spec), 2 * degree, t));
}

/// N terminal log-prices X_T from the Euler-Maruyama scheme.
template <StochasticVolSpec Spec>
WeightedSampleBatch sample_log_prices(const Spec& spec, double t, std::size_t steps, std::size_t n,
                                      std::uint64_t seed) {
  return sample_plain(StochasticVolSampler<Spec>{spec, t, steps, true}, n, seed);
}

inline void attach_reference(PriceReport& rep, std::optional<double> reference) {
  if (!reference) return;
  rep.reference_price = reference;
  rep.abs_error = std::abs(rep.price - *reference);
}

/// Call on the log-price fitted with a log-price Gram-Schmidt basis on a
/// given batch of terminal log-prices.
inline PriceReport price_log_price_batch(const WeightedSampleBatch& batch, const BasisSet& basis,
                                         const Payoff& payoff, double r, double t, double x0,
                                         const EstimatorConfig& config = {}) {
  std::vector<double> f(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) f[i] = eval_payoff(payoff, batch.point(i));
  PriceReport rep;
  rep.estimate = mcls_estimate_values(f, basis, batch, IntegralTable::orthonormal(basis.size()), config);
  rep.price = std::exp(-r * t) * rep.estimate.value;
  rep.basis_kind = to_string(basis.kind());
  rep.sampling = to_string(batch.law());
  if (payoff.kind == PayoffKind::call_logprice) {
    try {
      rep.implied_vol = implied_vol(rep.price, std::exp(x0), std::exp(payoff.log_strike), r, t);
    } catch (const NoSolutionError&) {
    }
  }
  return rep;
}

/// European option in the Heston or Jacobi model: Euler-Maruyama paths,
/// orthonormal log-price polynomials, price = e^{-rT} c_0.
template <StochasticVolSpec Spec>
PriceReport price_european(const Spec& spec, const Payoff& payoff, const PricingConfig& cfg,
                           std::optional<double> reference = std::nullopt) {
  spec.validate();
  if (payoff.kind != PayoffKind::call_logprice && payoff.kind != PayoffKind::constant) {
    throw DomainError("stochastic volatility models price log-price payoffs only");
  }
  const BasisSet basis = log_price_basis(spec, cfg.degree, cfg.maturity);
  const WeightedSampleBatch batch = sample_log_prices(spec, cfg.maturity, cfg.steps, cfg.n_samples, cfg.seed);
  PriceReport rep = price_log_price_batch(batch, basis, payoff, spec.r, cfg.maturity, spec.x0, cfg.estimator);
  attach_reference(rep, reference);
  return rep;
}

enum class BsMethod { direct_monomial, cube_weighted };

/// European option in the multivariate Black-Scholes model. direct_monomial
/// samples S_T exactly and fits monomials in the prices integrated by the
/// diagonal moment formula; cube_weighted rewrites the price over (0,1)^d and
/// uses tensor Legendre polynomials with optimal weighted sampling, keeping
/// only weights in memory when the design exceeds the storable limit.
inline PriceReport price_european(const BlackScholesSpec& spec, const Payoff& payoff, const PricingConfig& cfg,
                                  BsMethod method, std::optional<double> reference = std::nullopt) {
  PriceReport rep;
  const double t = cfg.maturity;
  if (method == BsMethod::direct_monomial) {
    const BasisSet basis = BasisSet::monomial(spec.d, cfg.degree);
    const auto table = IntegralTable::from_moments(bs_monomial_integrals(spec, basis, t));
    const WeightedSampleBatch batch = sample_plain(BlackScholesSampler{spec, t}, cfg.n_samples, cfg.seed);
    std::vector<double> f(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) f[i] = eval_payoff(payoff, batch.point(i));
    rep.estimate = mcls_estimate_values(f, basis, batch, table, cfg.estimator);
    rep.basis_kind = to_string(basis.kind());
    rep.sampling = to_string(batch.law());
  } else {
    const BasisSet basis = BasisSet::tensor_legendre(spec.d, cfg.degree);
    const auto table = IntegralTable::orthonormal(basis.size());
    auto run = [&](const auto& batch) {
      std::vector<double> f(batch.size());
      std::vector<double> x(spec.d);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        batch.point(i, x);
        f[i] = bs_cube_integrand(spec, payoff, t, x);
      }
      rep.estimate = mcls_estimate_values(f, basis, batch, table, cfg.estimator);
      rep.sampling = to_string(batch.law());
    };
    if (is_storable(cfg.n_samples, basis.size(), cfg.estimator.solver.storable_limit)) {
      run(sample_optimal(basis, cfg.n_samples, cfg.seed));
    } else {
      run(RegeneratedOptimalBatch(basis, cfg.n_samples, cfg.seed));
    }
    rep.basis_kind = to_string(basis.kind());
  }
  rep.price = std::exp(-spec.r * t) * rep.estimate.value;
  if (payoff.kind == PayoffKind::basket && spec.d == 1) {
    try {
      rep.implied_vol = implied_vol(rep.price, spec.s0[0], payoff.strike / payoff.weights[0], spec.r, t);
    } catch (const NoSolutionError&) {
    }
  }
  attach_reference(rep, reference);
  return rep;
}

struct ReferencePrice {
  double price = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

namespace detail {

class MeanAccumulator {
public:
  void add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  double mean() const noexcept { return mean_; }
  double std_error() const noexcept {
    return n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_)) : 0.0;
  }
  std::size_t count() const noexcept { return n_; }

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline ReferencePrice discounted(const MeanAccumulator& acc, double r, double t) {
  const double df = std::exp(-r * t);
  return {df * acc.mean(), df * acc.std_error(), acc.count()};
}

}  // namespace detail

/// Plain discounted MC price with its standard error (Euler-Maruyama paths).
template <StochasticVolSpec Spec>
ReferencePrice reference_price_mc(const Spec& spec, const Payoff& payoff, double t, std::size_t n_ref,
                                  std::size_t steps, std::uint64_t seed) {
  if (n_ref < 1) throw DomainError("reference needs at least one path");
  const StochasticVolSampler<Spec> sampler{spec, t, steps, true};
  detail::MeanAccumulator acc;
  double x = 0.0;
  for (std::size_t i = 0; i < n_ref; ++i) {
    StreamEngine eng(seed, i);
    sampler(eng, std::span<double>(&x, 1));
    acc.add(eval_payoff(payoff, std::span<const double>(&x, 1)));
  }
  return detail::discounted(acc, spec.r, t);
}

/// Plain discounted MC price with exact terminal sampling.
inline ReferencePrice reference_price_mc(const BlackScholesSpec& spec, const Payoff& payoff, double t,
                                         std::size_t n_ref, std::uint64_t seed) {
  if (n_ref < 1) throw DomainError("reference needs at least one path");
  const BlackScholesSampler sampler{spec, t};
  detail::MeanAccumulator acc;
  std::vector<double> s(spec.d);
  for (std::size_t i = 0; i < n_ref; ++i) {
    StreamEngine eng(seed, i);
    sampler(eng, s);
    acc.add(eval_payoff(payoff, s));
  }
  return detail::discounted(acc, spec.r, t);
}

}  // namespace mcls
