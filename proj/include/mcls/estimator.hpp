#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/error.hpp"
#include "mcls/normal.hpp"
#include "mcls/sampling.hpp"
#include "mcls/solvers.hpp"

namespace mcls {

/// Exact integrals m_j of the basis functions against the probability measure.
class IntegralTable {
public:
  /// (1, 0, ..., 0): orthonormal basis with phi_0 = 1.
  static IntegralTable orthonormal(std::size_t size) {
    std::vector<double> m(size, 0.0);
    if (size == 0) throw DomainError("empty integral table");
    m[0] = 1.0;
    return IntegralTable(std::move(m));
  }

  static IntegralTable from_moments(std::vector<double> m) {
    if (m.empty()) throw DomainError("empty integral table");
    if (std::abs(m[0] - 1.0) > 1e-12) throw DomainError("m_0 must be 1 for a probability measure");
    return IntegralTable(std::move(m));
  }

  std::size_t size() const noexcept { return m_.size(); }
  double operator[](std::size_t j) const { return m_[j]; }
  const std::vector<double>& values() const noexcept { return m_; }

private:
  explicit IntegralTable(std::vector<double> m) : m_(std::move(m)) {}
  std::vector<double> m_;
};

struct MclsEstimate {
  double value = 0.0;
  double sigma_ls = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_samples = 0;
  std::size_t n = 0;  ///< highest basis index; the basis has n+1 functions
  SampleLaw law = SampleLaw::plain;
  LsqSolution solution;
  std::uint64_t flop_count = 0;

  double ci_width() const noexcept { return ci_high - ci_low; }
};

struct EstimatorConfig {
  SolverConfig solver;
  double level = 0.95;
};

/// sigma_LS^2 = sum_i w_i^2 (f_i - p_i)^2 / (N - n - 1).
inline double variance_estimate(std::span<const double> residuals, std::span<const double> weights,
                                std::size_t n_samples, std::size_t n) {
  if (n_samples <= n + 1) throw DegreesOfFreedomError(n_samples, n);
  if (residuals.size() != n_samples || weights.size() != n_samples) {
    throw DomainError("residual and weight vectors must have N entries");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double wr = weights[i] * residuals[i];
    s += wr * wr;
  }
  return s / static_cast<double>(n_samples - n - 1);
}

/// Two-sided normal critical value; exactly 1.96 at the 95% level.
inline double critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must be in (0,1)");
  if (level == 0.95) return 1.96;
  return normal_quantile(0.5 + 0.5 * level);
}

/// value -/+ z * sigma / sqrt(N).
inline std::pair<double, double> confidence_interval(double value, double sigma_ls, std::size_t n_samples,
                                                     double level = 0.95) {
  if (sigma_ls < 0.0) throw DomainError("sigma must be non-negative");
  if (n_samples < 1) throw DomainError("sample size must be >= 1");
  const double half = critical_value(level) * sigma_ls / std::sqrt(static_cast<double>(n_samples));
  return {value - half, value + half};
}

/// Error of MC over error of MCLS at equal cost: e0 / (en sqrt(1 + (Cm/Cf) n)).
inline double error_ratio(double e0, double en, std::size_t n, double cost_f, double cost_m) {
  if (!(e0 > 0.0 && en > 0.0)) throw DomainError("errors must be positive");
  if (!(cost_f > 0.0 && cost_m > 0.0)) throw DomainError("costs must be positive");
  return e0 / (en * std::sqrt(1.0 + (cost_m / cost_f) * static_cast<double>(n)));
}

/// MCLS estimate from integrand values already evaluated at the batch points.
template <PointSet P>
MclsEstimate mcls_estimate_values(std::span<const double> f_values, const BasisSet& basis, const P& points,
                                  const IntegralTable& table, const EstimatorConfig& config = {}) {
  const std::size_t n_samples = points.size();
  const std::size_t m = basis.size();
  if (f_values.size() != n_samples) throw DomainError("one integrand value per sample is required");
  if (table.size() != m) throw DomainError("integral table does not match the basis");
  if (basis.dimension() != points.dimension()) throw DomainError("basis and sample dimensions differ");
  if (n_samples <= m) throw DegreesOfFreedomError(n_samples, m - 1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!std::isfinite(f_values[i])) throw DataError(i, f_values[i]);
  }

  std::vector<double> rhs(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) rhs[i] = std::sqrt(points.weight(i)) * f_values[i];

  MclsEstimate est;
  est.n_samples = n_samples;
  est.n = m - 1;
  est.law = points.law();
  est.solution = solve_design(basis, points, rhs, config.solver);
  rhs = {};
  const Eigen::VectorXd& c = est.solution.coeffs;
  for (std::size_t j = 0; j < m; ++j) est.value += c[static_cast<Eigen::Index>(j)] * table[j];

  // Residual pass streams over the points so no further N-vectors are held.
  double ss = 0.0;
  std::vector<double> x(points.dimension());
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n_samples; ++i) {
    points.point(i, x);
    basis.eval_row_unchecked(x, row);
    double p = 0.0;
    for (std::size_t j = 0; j < m; ++j) p += row[j] * c[static_cast<Eigen::Index>(j)];
    const double wr = points.weight(i) * (f_values[i] - p);
    ss += wr * wr;
  }
  est.sigma_ls = std::sqrt(ss / static_cast<double>(n_samples - m));
  std::tie(est.ci_low, est.ci_high) = confidence_interval(est.value, est.sigma_ls, n_samples, config.level);
  est.flop_count = est.solution.flop_count;
  return est;
}

/// Generalized MCLS: evaluate f on the batch, fit the basis by (weighted)
/// least squares and integrate the fit exactly.
template <class F, PointSet P>
  requires std::invocable<const F&, std::span<const double>>
MclsEstimate mcls_estimate(const F& f, const BasisSet& basis, const P& points, const IntegralTable& table,
                           const EstimatorConfig& config = {}) {
  std::vector<double> values(points.size());
  std::vector<double> x(points.dimension());
  for (std::size_t i = 0; i < points.size(); ++i) {
    points.point(i, x);
    values[i] = f(std::span<const double>(x));
  }
  return mcls_estimate_values(values, basis, points, table, config);
}

/// Plain MC mean with its sample standard deviation and CI.
inline MclsEstimate mc_estimate(std::span<const double> f_values, double level = 0.95) {
  const std::size_t n_samples = f_values.size();
  if (n_samples < 2) throw DegreesOfFreedomError(n_samples, 0);
  MclsEstimate est;
  est.n_samples = n_samples;
  double mean = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!std::isfinite(f_values[i])) throw DataError(i, f_values[i]);
    mean += f_values[i];
  }
  mean /= static_cast<double>(n_samples);
  double ss = 0.0;
  for (double v : f_values) ss += (v - mean) * (v - mean);
  est.value = mean;
  est.sigma_ls = std::sqrt(ss / static_cast<double>(n_samples - 1));
  std::tie(est.ci_low, est.ci_high) = confidence_interval(mean, est.sigma_ls, n_samples, level);
  est.solution.coeffs = Eigen::VectorXd::Constant(1, mean);
  est.flop_count = n_samples;
  return est;
}

}  // namespace mcls
