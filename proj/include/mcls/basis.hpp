#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcls/error.hpp"

namespace mcls {

/// Exponent tuple of a d-variate monomial or tensor-product basis function.
struct MultiIndex {
  std::vector<int> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : exponents(std::move(e)) {}
  MultiIndex(std::initializer_list<int> e) : exponents(e) {}

  std::size_t dimension() const noexcept { return exponents.size(); }
  int total_degree() const noexcept {
    int s = 0;
    for (int e : exponents) s += e;
    return s;
  }
  int operator[](std::size_t k) const { return exponents[k]; }
  int& operator[](std::size_t k) { return exponents[k]; }

  friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex out = a;
    for (std::size_t k = 0; k < out.exponents.size(); ++k) out.exponents[k] += b.exponents[k];
    return out;
  }
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

/// Number of d-variate multi-indices of total degree <= max_total_degree, i.e.
/// binom(max_total_degree + d, d). Throws CapacityError when not representable.
inline std::size_t multi_index_count(std::size_t d, int max_total_degree) {
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 32;
  // binom(m + d, d) built incrementally; each partial value is itself a binomial.
  std::uint64_t c = 1;
  const auto m = static_cast<std::uint64_t>(max_total_degree);
  for (std::uint64_t i = 1; i <= d; ++i) {
    const unsigned __int128 next = static_cast<unsigned __int128>(c) * (m + i) / i;
    if (next > kLimit) {
      throw CapacityError("basis of dimension " + std::to_string(d) + " and degree " +
                          std::to_string(max_total_degree) + " exceeds 2^32 functions");
    }
    c = static_cast<std::uint64_t>(next);
  }
  return static_cast<std::size_t>(c);
}

namespace detail {

inline void enumerate_fixed_degree(std::size_t d, int degree, std::size_t pos,
                                   std::vector<int>& current, std::vector<MultiIndex>& out) {
  if (pos + 1 == d) {
    current[pos] = degree;
    out.emplace_back(current);
    return;
  }
  for (int a = degree; a >= 0; --a) {
    current[pos] = a;
    enumerate_fixed_degree(d, degree - a, pos + 1, current, out);
  }
  current[pos] = 0;
}

}  // namespace detail

/// All multi-indices of total degree <= max_total_degree in graded order:
/// total degree non-decreasing, ties in descending lexicographic order, so that
/// (d=2, deg=2) gives (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
inline std::vector<MultiIndex> enumerate_multi_indices(std::size_t d, int max_total_degree) {
  if (d < 1) throw DomainError("multi-index dimension must be >= 1");
  if (max_total_degree < 0) throw DomainError("maximal total degree must be >= 0");
  const std::size_t count = multi_index_count(d, max_total_degree);
  std::vector<MultiIndex> out;
  out.reserve(count);
  std::vector<int> current(d, 0);
  for (int t = 0; t <= max_total_degree; ++t) detail::enumerate_fixed_degree(d, t, 0, current, out);
  return out;
}

/// Values of the shifted Legendre polynomials on [0,1], normalized so that
/// int_0^1 L_m(x)^2 dx = 1, for m = 0..out.size()-1. Three-term recurrence.
inline void shifted_legendre_values(double x, std::span<double> out) {
  if (out.empty()) return;
  const double t = 2.0 * x - 1.0;
  double p_prev = 1.0;
  double p = t;
  out[0] = 1.0;
  if (out.size() > 1) out[1] = std::sqrt(3.0) * t;
  for (std::size_t m = 1; m + 1 < out.size(); ++m) {
    const double md = static_cast<double>(m);
    const double p_next = ((2.0 * md + 1.0) * t * p - md * p_prev) / (md + 1.0);
    p_prev = p;
    p = p_next;
    out[m + 1] = std::sqrt(2.0 * md + 3.0) * p;
  }
}

/// Single normalized shifted Legendre value L_m(x).
inline double shifted_legendre(int m, double x) {
  if (m == 0) return 1.0;
  const double t = 2.0 * x - 1.0;
  if (m == 1) return std::sqrt(3.0) * t;
  if (m == 2) return std::sqrt(5.0) * 0.5 * (3.0 * t * t - 1.0);
  double p_prev = 1.0;
  double p = t;
  for (int k = 1; k < m; ++k) {
    const double kd = k;
    const double p_next = ((2.0 * kd + 1.0) * t * p - kd * p_prev) / (kd + 1.0);
    p_prev = p;
    p = p_next;
  }
  return std::sqrt(2.0 * m + 1.0) * p;
}

/// Moments E_mu[x^a] for multi-indices up to a fixed total degree.
struct InnerProductOracle {
  std::size_t dimension = 1;
  int max_total_degree = 0;
  std::function<double(const MultiIndex&)> moment;

  /// <x^a, x^b>_mu
  double operator()(const MultiIndex& a, const MultiIndex& b) const { return moment(a + b); }
};

/// Lebesgue measure on [0,1]^d: E[x^a] = prod 1/(a_k+1).
inline InnerProductOracle lebesgue_cube_moments(std::size_t d, int max_total_degree) {
  return {d, max_total_degree, [](const MultiIndex& a) {
            double m = 1.0;
            for (int e : a.exponents) m /= (e + 1.0);
            return m;
          }};
}

enum class BasisKind { tensor_legendre, monomial, gram_schmidt };

inline std::string to_string(BasisKind k) {
  switch (k) {
    case BasisKind::tensor_legendre: return "tensor-legendre";
    case BasisKind::monomial: return "monomial";
    case BasisKind::gram_schmidt: return "gram-schmidt";
  }
  return "?";
}

/// Ordered family {phi_0, ..., phi_n} with phi_0 == 1.
///
/// Tensor-Legendre and monomial functions are products of univariate factors
/// over the non-zero exponents of their multi-index; Gram-Schmidt functions are
/// lower-triangular combinations of monomials (phi = transform * monomials).
/// Immutable once built; evaluation is thread-safe.
class BasisSet {
public:
  struct Factor {
    std::uint32_t coordinate;
    std::uint32_t exponent;
  };

  static BasisSet tensor_legendre(std::size_t d, int max_total_degree) {
    return BasisSet(BasisKind::tensor_legendre, enumerate_multi_indices(d, max_total_degree));
  }

  static BasisSet monomial(std::size_t d, int max_total_degree) {
    return BasisSet(BasisKind::monomial, enumerate_multi_indices(d, max_total_degree));
  }

  /// First `count` functions of the graded enumeration (a degree-truncation
  /// when `count` is a full binomial). Not available for Gram-Schmidt bases.
  BasisSet prefix(std::size_t count) const {
    if (kind_ == BasisKind::gram_schmidt) throw DomainError("prefix of a Gram-Schmidt basis");
    if (count < 1 || count > size()) throw DomainError("basis prefix size out of range");
    return BasisSet(kind_, std::vector<MultiIndex>(indices_.begin(), indices_.begin() + count));
  }

  BasisKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  int max_degree() const noexcept { return max_degree_; }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  const std::optional<Eigen::MatrixXd>& transform() const noexcept { return transform_; }

  /// True when every function is a product of univariate factors.
  bool factorized() const noexcept { return kind_ != BasisKind::gram_schmidt; }

  /// Non-zero (coordinate, exponent) pairs of function j (factorized kinds).
  std::span<const Factor> support(std::size_t j) const {
    return {factors_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
  }

  /// Univariate factor of degree m at coordinate value x (factorized kinds).
  double univariate(int m, double x) const {
    if (kind_ == BasisKind::tensor_legendre) return shifted_legendre(m, x);
    return std::pow(x, m);
  }

  void check_domain(std::span<const double> x) const {
    if (x.size() != dimension_) throw DomainError("point dimension does not match the basis");
    if (kind_ == BasisKind::tensor_legendre) {
      for (double xk : x) {
        if (!(xk >= 0.0 && xk <= 1.0)) throw DomainError("point outside the unit cube");
      }
    } else {
      for (double xk : x) {
        if (!std::isfinite(xk)) throw DomainError("non-finite coordinate");
      }
    }
  }

  /// phi_j(x).
  double eval(std::size_t j, std::span<const double> x) const {
    check_domain(x);
    if (j >= size()) throw DomainError("basis index out of range");
    if (kind_ == BasisKind::gram_schmidt) {
      std::vector<double> row(size());
      eval_row_unchecked(x, row);
      return row[j];
    }
    double v = 1.0;
    for (const Factor& f : support(j)) v *= univariate(static_cast<int>(f.exponent), x[f.coordinate]);
    return v;
  }

  /// out[j] = phi_j(x) for j = 0..n.
  void eval_row(std::span<const double> x, std::span<double> out) const {
    check_domain(x);
    if (out.size() != size()) throw DomainError("row buffer has the wrong size");
    eval_row_unchecked(x, out);
  }

  std::vector<double> eval_row(std::span<const double> x) const {
    std::vector<double> out(size());
    eval_row(x, out);
    return out;
  }

  /// Row evaluation without domain checks; `out.size() == size()`.
  void eval_row_unchecked(std::span<const double> x, std::span<double> out) const {
    const std::size_t stride = static_cast<std::size_t>(max_degree_) + 1;
    thread_local std::vector<double> table;
    table.resize(dimension_ * stride);
    for (std::size_t k = 0; k < dimension_; ++k) {
      std::span<double> tk(table.data() + k * stride, stride);
      if (kind_ == BasisKind::tensor_legendre) {
        shifted_legendre_values(x[k], tk);
      } else {
        double p = 1.0;
        for (std::size_t m = 0; m < stride; ++m) {
          tk[m] = p;
          p *= x[k];
        }
      }
    }
    if (kind_ == BasisKind::gram_schmidt) {
      thread_local std::vector<double> raw;
      raw.resize(size());
      fill_products(table, stride, raw);
      const Eigen::MatrixXd& t = *transform_;
      for (std::size_t i = 0; i < size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * raw[k];
        out[i] = s;
      }
      out[0] = 1.0;
      return;
    }
    fill_products(table, stride, out);
  }

  friend BasisSet gram_schmidt(const BasisSet& raw, const InnerProductOracle& ip, double tolerance);

private:
  BasisSet(BasisKind kind, std::vector<MultiIndex> indices) : kind_(kind), indices_(std::move(indices)) {
    if (indices_.empty()) throw DomainError("basis must contain at least phi_0");
    dimension_ = indices_.front().dimension();
    if (indices_.front().total_degree() != 0) throw DomainError("first basis function must be constant");
    offsets_.reserve(indices_.size() + 1);
    offsets_.push_back(0);
    for (const MultiIndex& a : indices_) {
      if (a.dimension() != dimension_) throw DomainError("mixed multi-index dimensions");
      max_degree_ = std::max(max_degree_, a.total_degree());
      for (std::size_t k = 0; k < dimension_; ++k) {
        if (a[k] > 0) factors_.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(a[k])});
      }
      offsets_.push_back(factors_.size());
    }
    link_parents();
  }

  // phi_j = phi_parent(j) * (last factor of j); parents precede children in
  // graded order, so one multiply per function suffices.
  void fill_products(const std::vector<double>& table, std::size_t stride, std::span<double> out) const {
    out[0] = 1.0;
    for (std::size_t j = 1; j < indices_.size(); ++j) {
      if (parents_[j] == kNoParent) {
        double v = 1.0;
        for (std::size_t f = offsets_[j]; f < offsets_[j + 1]; ++f) {
          v *= table[factors_[f].coordinate * stride + factors_[f].exponent];
        }
        out[j] = v;
      } else {
        const Factor& f = factors_[offsets_[j + 1] - 1];
        out[j] = out[parents_[j]] * table[f.coordinate * stride + f.exponent];
      }
    }
  }

  void link_parents() {
    std::map<std::vector<int>, std::size_t> position;
    for (std::size_t j = 0; j < indices_.size(); ++j) position.emplace(indices_[j].exponents, j);
    parents_.assign(indices_.size(), kNoParent);
    for (std::size_t j = 1; j < indices_.size(); ++j) {
      if (offsets_[j + 1] == offsets_[j]) continue;
      std::vector<int> e = indices_[j].exponents;
      e[factors_[offsets_[j + 1] - 1].coordinate] = 0;
      const auto it = position.find(e);
      if (it != position.end() && it->second < j) parents_[j] = it->second;
    }
  }

  static constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

  BasisKind kind_;
  std::vector<MultiIndex> indices_;
  std::size_t dimension_ = 0;
  int max_degree_ = 0;
  std::vector<Factor> factors_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> parents_;
  std::optional<Eigen::MatrixXd> transform_;
};

inline constexpr double kDefaultOrthogonalityTolerance = 1e-10;

/// Smallest admissible squared pivot norm relative to the raw monomial norm.
inline constexpr double kPivotTolerance = 1e-13;

/// Gram matrix <m_i, m_j>_mu of a monomial basis.
inline Eigen::MatrixXd monomial_gram_matrix(const BasisSet& raw, const InnerProductOracle& ip) {
  const auto n = static_cast<Eigen::Index>(raw.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      g(i, j) = ip(raw.indices()[static_cast<std::size_t>(i)], raw.indices()[static_cast<std::size_t>(j)]);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

/// Orthonormalize a monomial basis with respect to the measure behind `ip`.
///
/// Modified Gram-Schmidt in the coefficient space with one re-orthogonalization
/// pass. A pivot whose remaining squared norm is negligible relative to the raw
/// monomial, or an output Gram matrix deviating from the identity by more than
/// 10 * tolerance, raises IllConditionedMoments.
inline BasisSet gram_schmidt(const BasisSet& raw, const InnerProductOracle& ip,
                             double tolerance = kDefaultOrthogonalityTolerance) {
  if (raw.kind() != BasisKind::monomial) throw DomainError("Gram-Schmidt expects a monomial basis");
  if (ip.dimension != raw.dimension()) throw DomainError("inner product dimension mismatch");
  if (ip.max_total_degree < 2 * raw.max_degree()) {
    throw DomainError("inner product oracle must provide moments up to twice the basis degree");
  }
  const Eigen::MatrixXd g = monomial_gram_matrix(raw, ip);
  if (std::abs(g(0, 0) - 1.0) > 1e-12) throw DomainError("measure must be a probability measure");

  const auto n = static_cast<Eigen::Index>(raw.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);  // column i: coefficients of phi_i
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double proj = q.col(j).dot(g * v);
        v -= proj * q.col(j);
      }
    }
    const double norm_sq = v.dot(g * v);
    if (!(norm_sq > kPivotTolerance * g(i, i)) || !std::isfinite(norm_sq)) {
      throw IllConditionedMoments(static_cast<std::size_t>(i), norm_sq);
    }
    q.col(i) = v / std::sqrt(norm_sq);
  }
  const Eigen::MatrixXd defect = q.transpose() * g * q - Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (defect.row(i).cwiseAbs().maxCoeff() > 10.0 * tolerance) {
      throw IllConditionedMoments(static_cast<std::size_t>(i), defect.row(i).cwiseAbs().maxCoeff());
    }
  }
  BasisSet out = raw;
  out.kind_ = BasisKind::gram_schmidt;
  out.transform_ = q.transpose();
  (*out.transform_)(0, 0) = 1.0;
  return out;
}

/// Gram matrix <phi_i, phi_j>_mu of a Gram-Schmidt basis under `ip`.
inline Eigen::MatrixXd orthonormality_defect_matrix(const BasisSet& gs, const InnerProductOracle& ip) {
  BasisSet raw = BasisSet::monomial(gs.dimension(), gs.max_degree());
  if (raw.size() != gs.size()) throw DomainError("basis is not a full degree truncation");
  const Eigen::MatrixXd& t = *gs.transform();
  return t * monomial_gram_matrix(raw, ip) * t.transpose();
}

}  // namespace mcls
