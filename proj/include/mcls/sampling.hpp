#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/error.hpp"
#include "mcls/rng.hpp"

namespace mcls {

enum class SampleLaw { plain, optimal_weighted };

inline std::string to_string(SampleLaw law) {
  return law == SampleLaw::plain ? "plain" : "optimal-weighted";
}

/// Read access to N sample points with their weights w(x_i).
template <class P>
concept PointSet = requires(const P& p, std::size_t i, std::span<double> out) {
  { p.size() } -> std::convertible_to<std::size_t>;
  { p.dimension() } -> std::convertible_to<std::size_t>;
  { p.weight(i) } -> std::convertible_to<double>;
  { p.law() } -> std::same_as<SampleLaw>;
  p.point(i, out);
};

/// Point sets that also expose single coordinates without building the point.
template <class P>
concept CoordinateAccess = PointSet<P> && requires(const P& p, std::size_t i, std::size_t k) {
  { p.coordinate(i, k) } -> std::convertible_to<double>;
};

/// Draws one point of a measure from a per-point random stream.
template <class S>
concept PointSampler = requires(const S& s, StreamEngine& eng, std::span<double> out) {
  { s.dimension() } -> std::convertible_to<std::size_t>;
  s(eng, out);
};

/// N points stored row-major with their weights. Immutable after sampling.
class WeightedSampleBatch {
public:
  WeightedSampleBatch(std::size_t dimension, std::vector<double> points, std::vector<double> weights,
                      SampleLaw law, std::uint64_t seed)
      : dimension_(dimension), points_(std::move(points)), weights_(std::move(weights)), law_(law), seed_(seed) {
    if (dimension_ == 0 || weights_.empty() || points_.size() != weights_.size() * dimension_) {
      throw DomainError("inconsistent sample batch");
    }
  }

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  SampleLaw law() const noexcept { return law_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& points() const noexcept { return points_; }

  std::span<const double> point(std::size_t i) const { return {points_.data() + i * dimension_, dimension_}; }
  void point(std::size_t i, std::span<double> out) const {
    const auto p = point(i);
    std::copy(p.begin(), p.end(), out.begin());
  }
  double coordinate(std::size_t i, std::size_t k) const { return points_[i * dimension_ + k]; }

private:
  std::size_t dimension_;
  std::vector<double> points_;
  std::vector<double> weights_;
  SampleLaw law_;
  std::uint64_t seed_;
};

/// Uniform (Lebesgue) probability measure on the open unit cube.
struct UniformCube {
  std::size_t d = 1;
  std::size_t dimension() const noexcept { return d; }
  void operator()(StreamEngine& eng, std::span<double> out) const {
    for (double& x : out) x = eng.open_uniform();
  }
};

/// N i.i.d. draws from the sampler's measure, weights 1. Point i uses the
/// stream (seed, i), so the batch does not depend on evaluation order.
template <PointSampler S>
WeightedSampleBatch sample_plain(const S& sampler, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("sample size must be >= 1");
  const std::size_t d = sampler.dimension();
  std::vector<double> points(n_samples * d);
  for (std::size_t i = 0; i < n_samples; ++i) {
    StreamEngine eng(seed, i);
    sampler(eng, std::span<double>(points.data() + i * d, d));
  }
  return WeightedSampleBatch(d, std::move(points), std::vector<double>(n_samples, 1.0), SampleLaw::plain, seed);
}

/// w(x) = (n+1) / sum_j phi_j(x)^2.
inline double optimal_weight(const BasisSet& basis, std::span<const double> x) {
  const std::vector<double> row = basis.eval_row(x);
  double s = 0.0;
  for (double v : row) s += v * v;
  return static_cast<double>(basis.size()) / s;
}

inline constexpr std::size_t kDefaultMaxRejectionAttempts = 1'000'000;

/// Sampler for the mixture components phi_j^2 dx of a tensor-Legendre basis on
/// the unit cube. phi_j^2 is a product density, so each coordinate with
/// exponent a > 0 is drawn by rejection from the uniform law with envelope
/// 2a + 1 = sup L_a^2; coordinates with a = 0 are uniform.
///
/// Counter layout of a point stream: 0 selects the component, and coordinate k
/// uses counters 1 + (k << 32) + 2t, 2 + (k << 32) + 2t for attempt t.
class LegendreComponentSampler {
public:
  explicit LegendreComponentSampler(const BasisSet& basis,
                                    std::size_t max_attempts = kDefaultMaxRejectionAttempts)
      : basis_(&basis), max_attempts_(max_attempts) {
    if (basis.kind() != BasisKind::tensor_legendre) {
      throw DomainError("optimal sampling requires a tensor-Legendre basis on the unit cube");
    }
    const std::size_t d = basis.dimension();
    exponents_.resize(basis.size() * d);
    for (std::size_t j = 0; j < basis.size(); ++j)
      for (std::size_t k = 0; k < d; ++k) exponents_[j * d + k] = basis.indices()[j][k];
  }

  const BasisSet& basis() const noexcept { return *basis_; }
  std::size_t dimension() const noexcept { return basis_->dimension(); }

  /// Mixture component of the point with stream `rng`, uniform over 0..n.
  std::size_t component(const CounterRng& rng) const noexcept { return rng.below(0, basis_->size()); }

  /// Coordinate k of a draw from phi_j^2 dx.
  double coordinate(std::size_t j, const CounterRng& rng, std::size_t k) const {
    const int a = exponents_[j * basis_->dimension() + k];
    const std::uint64_t base = 1 + (static_cast<std::uint64_t>(k) << 32);
    if (a == 0) return rng.open_uniform(base);
    const double envelope = 2.0 * a + 1.0;
    for (std::size_t t = 0; t < max_attempts_; ++t) {
      const double x = rng.open_uniform(base + 2 * t);
      const double u = rng.uniform(base + 2 * t + 1);
      const double l = shifted_legendre(a, x);
      if (u * envelope < l * l) return x;
    }
    throw SamplerStuck(max_attempts_, 0);
  }

  void draw(const CounterRng& rng, std::span<double> out) const {
    const std::size_t j = component(rng);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = coordinate(j, rng, k);
  }

private:
  const BasisSet* basis_;
  std::size_t max_attempts_;
  std::vector<int> exponents_;
};

/// Optimal weighted design whose points are recomputed from (seed, i) on
/// demand; only the N weights and mixture components are stored. Point i is bit-identical to point i
/// of sample_optimal() with the same basis and seed.
class RegeneratedOptimalBatch {
public:
  RegeneratedOptimalBatch(const BasisSet& basis, std::size_t n_samples, std::uint64_t seed,
                          std::size_t max_attempts = kDefaultMaxRejectionAttempts)
      : sampler_(basis, max_attempts), n_(n_samples), seed_(seed), weights_(n_samples), components_(n_samples) {
    if (n_samples < 1) throw DomainError("sample size must be >= 1");
    if (basis.size() > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("basis too large");
    for (std::size_t i = 0; i < n_; ++i) {
      components_[i] = static_cast<std::uint32_t>(sampler_.component(CounterRng(seed_, i)));
    }
    std::vector<double> x(basis.dimension());
    std::vector<double> row(basis.size());
    const double np1 = static_cast<double>(basis.size());
    for (std::size_t i = 0; i < n_; ++i) {
      point(i, x);
      basis.eval_row_unchecked(x, row);
      double s = 0.0;
      for (double v : row) s += v * v;
      weights_[i] = np1 / s;
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dimension() const noexcept { return sampler_.dimension(); }
  SampleLaw law() const noexcept { return SampleLaw::optimal_weighted; }
  std::uint64_t seed() const noexcept { return seed_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const BasisSet& basis() const noexcept { return sampler_.basis(); }

  void point(std::size_t i, std::span<double> out) const {
    const CounterRng rng(seed_, i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = sampler_.coordinate(components_[i], rng, k);
  }

  double coordinate(std::size_t i, std::size_t k) const {
    return sampler_.coordinate(components_[i], CounterRng(seed_, i), k);
  }

private:
  LegendreComponentSampler sampler_;
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<double> weights_;
  std::vector<std::uint32_t> components_;
};

/// N i.i.d. draws from dmu/w (mu = Lebesgue on the unit cube) with weights
/// w(x_i): pick phi_j uniformly, then draw from phi_j^2 dmu.
inline WeightedSampleBatch sample_optimal(const BasisSet& basis, std::size_t n_samples, std::uint64_t seed,
                                          std::size_t max_attempts = kDefaultMaxRejectionAttempts) {
  if (n_samples < 1) throw DomainError("sample size must be >= 1");
  const LegendreComponentSampler sampler(basis, max_attempts);
  const std::size_t d = basis.dimension();
  std::vector<double> points(n_samples * d);
  std::vector<double> weights(n_samples);
  std::vector<double> row(basis.size());
  const double np1 = static_cast<double>(basis.size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::span<double> x(points.data() + i * d, d);
    sampler.draw(CounterRng(seed, i), x);
    basis.eval_row_unchecked(x, row);
    double s = 0.0;
    for (double v : row) s += v * v;
    weights[i] = np1 / s;
  }
  return WeightedSampleBatch(d, std::move(points), std::move(weights), SampleLaw::optimal_weighted, seed);
}

}  // namespace mcls
