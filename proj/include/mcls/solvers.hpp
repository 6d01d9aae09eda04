#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/error.hpp"
#include "mcls/rng.hpp"
#include "mcls/sampling.hpp"

namespace mcls {

enum class SolverKind { qr, cg_normal, rek };
enum class SolverChoice { automatic, qr, cg, rek };

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::qr: return "qr";
    case SolverKind::cg_normal: return "cg";
    case SolverKind::rek: return "rek";
  }
  return "?";
}

inline std::string to_string(SolverChoice c) {
  switch (c) {
    case SolverChoice::automatic: return "auto";
    case SolverChoice::qr: return "qr";
    case SolverChoice::cg: return "cg";
    case SolverChoice::rek: return "rek";
  }
  return "?";
}

inline SolverChoice parse_solver_choice(const std::string& s) {
  if (s == "auto") return SolverChoice::automatic;
  if (s == "qr") return SolverChoice::qr;
  if (s == "cg") return SolverChoice::cg;
  if (s == "rek") return SolverChoice::rek;
  throw ConfigError("unknown solver '" + s + "' (expected auto, qr, cg or rek)");
}

/// Result of min_c ||V c - f||_2 with diagnostics.
struct LsqSolution {
  Eigen::VectorXd coeffs;
  double residual_norm = 0.0;         ///< ||V c - f||_2
  double normal_residual_norm = 0.0;  ///< ||V^T (V c - f)||_2
  SolverKind solver = SolverKind::qr;
  std::size_t iterations = 0;
  std::optional<double> kappa_estimate;
  std::uint64_t flop_count = 0;
  bool converged = true;
  bool rank_deficient = false;
  /// REK stopping measures at the last check (both scaled by ||V||_F ||c||).
  double rek_residual = 0.0;
  double rek_projection = 0.0;
};

/// Row/column access to an N x (n+1) design matrix.
template <class O>
concept VandermondeOracle = requires(const O& v, std::size_t i, std::span<double> out) {
  { v.rows() } -> std::convertible_to<std::size_t>;
  { v.cols() } -> std::convertible_to<std::size_t>;
  v.row(i, out);
  v.column(i, out);
  { v.column_norms_sq() } -> std::convertible_to<const std::vector<double>&>;
  { v.frobenius_norm_sq() } -> std::convertible_to<double>;
  { v.row_norms_equal() } -> std::convertible_to<bool>;
  { v.row_norm_sq(i) } -> std::convertible_to<double>;
  { v.materialized() } -> std::convertible_to<const Eigen::MatrixXd*>;
};

/// Dense, stored design matrix.
class DenseVandermonde {
public:
  explicit DenseVandermonde(Eigen::MatrixXd v, bool row_norms_equal = false)
      : v_(std::move(v)), equal_rows_(row_norms_equal) {
    col_norms_sq_.resize(static_cast<std::size_t>(v_.cols()));
    for (Eigen::Index j = 0; j < v_.cols(); ++j) col_norms_sq_[static_cast<std::size_t>(j)] = v_.col(j).squaredNorm();
    fro_sq_ = std::accumulate(col_norms_sq_.begin(), col_norms_sq_.end(), 0.0);
    if (equal_rows_ && v_.rows() > 0) common_row_sq_ = fro_sq_ / static_cast<double>(v_.rows());
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(v_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(v_.cols()); }
  const Eigen::MatrixXd& matrix() const noexcept { return v_; }
  const Eigen::MatrixXd* materialized() const noexcept { return &v_; }

  void row(std::size_t i, std::span<double> out) const {
    for (Eigen::Index j = 0; j < v_.cols(); ++j) out[static_cast<std::size_t>(j)] = v_(static_cast<Eigen::Index>(i), j);
  }
  void column(std::size_t j, std::span<double> out) const {
    Eigen::Map<Eigen::VectorXd>(out.data(), v_.rows()) = v_.col(static_cast<Eigen::Index>(j));
  }
  const std::vector<double>& column_norms_sq() const noexcept { return col_norms_sq_; }
  double frobenius_norm_sq() const noexcept { return fro_sq_; }
  bool row_norms_equal() const noexcept { return equal_rows_; }
  double row_norm_sq(std::size_t i) const {
    return equal_rows_ ? common_row_sq_ : v_.row(static_cast<Eigen::Index>(i)).squaredNorm();
  }

private:
  Eigen::MatrixXd v_;
  bool equal_rows_;
  std::vector<double> col_norms_sq_;
  double fro_sq_ = 0.0;
  double common_row_sq_ = 0.0;
};

/// Design matrix rows sqrt(w_i) * (phi_0(x_i), ..., phi_n(x_i)) evaluated on
/// demand. Memory is O(N + n): columns norms come from one streaming pass and
/// no N x (n+1) storage exists. The basis and point set must outlive it.
template <PointSet P>
class ImplicitVandermonde {
public:
  ImplicitVandermonde(const BasisSet& basis, const P& points)
      : basis_(&basis), points_(&points), equal_rows_(points.law() == SampleLaw::optimal_weighted) {
    if (basis.dimension() != points.dimension()) throw DomainError("basis and sample dimensions differ");
    const std::size_t m = basis.size();
    col_norms_sq_.assign(m, 0.0);
    std::vector<double> r(m);
    for (std::size_t i = 0; i < points.size(); ++i) {
      row(i, r);
      for (std::size_t j = 0; j < m; ++j) col_norms_sq_[j] += r[j] * r[j];
    }
    fro_sq_ = std::accumulate(col_norms_sq_.begin(), col_norms_sq_.end(), 0.0);
  }

  std::size_t rows() const noexcept { return points_->size(); }
  std::size_t cols() const noexcept { return basis_->size(); }
  const Eigen::MatrixXd* materialized() const noexcept { return nullptr; }
  const std::vector<double>& column_norms_sq() const noexcept { return col_norms_sq_; }
  double frobenius_norm_sq() const noexcept { return fro_sq_; }
  bool row_norms_equal() const noexcept { return equal_rows_; }

  void row(std::size_t i, std::span<double> out) const {
    thread_local std::vector<double> x;
    x.resize(points_->dimension());
    points_->point(i, x);
    basis_->eval_row_unchecked(x, out);
    const double s = std::sqrt(points_->weight(i));
    for (double& v : out) v *= s;
  }

  double row_norm_sq(std::size_t i) const {
    if (equal_rows_) return static_cast<double>(cols());
    thread_local std::vector<double> r;
    r.resize(cols());
    row(i, r);
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
  }

  void column(std::size_t j, std::span<double> out) const {
    const std::size_t n = rows();
    if constexpr (CoordinateAccess<P>) {
      if (basis_->factorized()) {
        const auto factors = basis_->support(j);
        for (std::size_t i = 0; i < n; ++i) {
          double v = std::sqrt(points_->weight(i));
          for (const auto& f : factors) {
            v *= basis_->univariate(static_cast<int>(f.exponent), points_->coordinate(i, f.coordinate));
          }
          out[i] = v;
        }
        return;
      }
    }
    thread_local std::vector<double> r;
    r.resize(cols());
    for (std::size_t i = 0; i < n; ++i) {
      row(i, r);
      out[i] = r[j];
    }
  }

private:
  const BasisSet* basis_;
  const P* points_;
  bool equal_rows_;
  std::vector<double> col_norms_sq_;
  double fro_sq_ = 0.0;
};

/// Stored weighted design sqrt(W) V for a point set.
template <PointSet P>
DenseVandermonde materialize(const BasisSet& basis, const P& points) {
  if (basis.dimension() != points.dimension()) throw DomainError("basis and sample dimensions differ");
  const std::size_t n = points.size();
  const std::size_t m = basis.size();
  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<double> x(points.dimension());
  std::vector<double> r(m);
  for (std::size_t i = 0; i < n; ++i) {
    points.point(i, x);
    basis.eval_row(x, r);
    const double s = std::sqrt(points.weight(i));
    for (std::size_t j = 0; j < m; ++j) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s * r[j];
  }
  return DenseVandermonde(std::move(v), points.law() == SampleLaw::optimal_weighted);
}

namespace detail {

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> f) {
  return {f.data(), static_cast<Eigen::Index>(f.size())};
}

/// ||V c - f|| and ||V^T (V c - f)|| by one pass over the rows.
template <VandermondeOracle O>
void residual_norms(const O& v, std::span<const double> f, const Eigen::VectorXd& c, LsqSolution& sol) {
  if (const Eigen::MatrixXd* m = v.materialized()) {
    const Eigen::VectorXd r = (*m) * c - as_vector(f);
    sol.residual_norm = r.norm();
    sol.normal_residual_norm = (m->transpose() * r).norm();
    return;
  }
  const std::size_t cols = v.cols();
  std::vector<double> row(cols);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
  double rr = 0.0;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    v.row(i, row);
    double ri = -f[i];
    for (std::size_t j = 0; j < cols; ++j) ri += row[j] * c[static_cast<Eigen::Index>(j)];
    rr += ri * ri;
    for (std::size_t j = 0; j < cols; ++j) g[static_cast<Eigen::Index>(j)] += row[j] * ri;
  }
  sol.residual_norm = std::sqrt(rr);
  sol.normal_residual_norm = g.norm();
}

template <VandermondeOracle O>
Eigen::VectorXd apply(const O& v, const Eigen::VectorXd& x) {
  if (const Eigen::MatrixXd* m = v.materialized()) return (*m) * x;
  Eigen::VectorXd y(static_cast<Eigen::Index>(v.rows()));
  std::vector<double> row(v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    v.row(i, row);
    y[static_cast<Eigen::Index>(i)] = detail::as_vector(row).dot(x);
  }
  return y;
}

template <VandermondeOracle O>
Eigen::VectorXd apply_transpose(const O& v, const Eigen::VectorXd& y) {
  if (const Eigen::MatrixXd* m = v.materialized()) return m->transpose() * y;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.cols()));
  std::vector<double> row(v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    v.row(i, row);
    x += y[static_cast<Eigen::Index>(i)] * detail::as_vector(row);
  }
  return x;
}

/// V^T (V x) with a single sweep over the rows of a matrix-free oracle.
template <VandermondeOracle O>
Eigen::VectorXd normal_apply(const O& v, const Eigen::VectorXd& x) {
  if (const Eigen::MatrixXd* m = v.materialized()) return m->transpose() * ((*m) * x);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.cols()));
  std::vector<double> row(v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    v.row(i, row);
    const auto r = detail::as_vector(row);
    y += r.dot(x) * r;
  }
  return y;
}

}  // namespace detail

/// Least squares by a complete orthogonal decomposition (Householder QR with
/// column pivoting); returns the minimum-norm solution when rank deficient.
inline LsqSolution solve_qr(const DenseVandermonde& v, std::span<const double> f) {
  if (f.size() != v.rows()) throw DomainError("right-hand side length mismatch");
  const Eigen::MatrixXd& m = v.matrix();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  LsqSolution sol;
  sol.solver = SolverKind::qr;
  sol.coeffs = cod.solve(detail::as_vector(f));
  sol.rank_deficient = cod.rank() < m.cols();
  const double nr = static_cast<double>(m.rows());
  const double nc = static_cast<double>(m.cols());
  sol.flop_count = static_cast<std::uint64_t>(2.0 * nr * nc * nc - 2.0 * nc * nc * nc / 3.0 + 4.0 * nr * nc);
  detail::residual_norms(v, f, sol.coeffs, sol);
  return sol;
}

struct CgOptions {
  double tolerance = 1e-10;
  /// 0 selects 20 (n+1) + 100.
  std::size_t max_iterations = 0;
};

/// Conjugate gradients on V^T V c = V^T f. Stops once
/// ||V^T (V c - f)|| <= tolerance * ||V^T f||. A matrix-free oracle is swept
/// once per iteration; each iteration is counted as 2 N (n+1) flops.
template <VandermondeOracle O>
LsqSolution solve_cg_normal(const O& v, std::span<const double> f, const CgOptions& opt = {}) {
  if (f.size() != v.rows()) throw DomainError("right-hand side length mismatch");
  if (!(opt.tolerance > 0.0)) throw DomainError("CG tolerance must be positive");
  const auto m = static_cast<Eigen::Index>(v.cols());
  const std::size_t max_iter = opt.max_iterations ? opt.max_iterations : 20 * v.cols() + 100;
  const double per_iter = 2.0 * static_cast<double>(v.rows()) * static_cast<double>(v.cols());

  LsqSolution sol;
  sol.solver = SolverKind::cg_normal;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd s = detail::apply_transpose(v, Eigen::VectorXd(detail::as_vector(f)));
  const double s0 = s.norm();
  if (s0 == 0.0) {
    sol.coeffs = c;
    detail::residual_norms(v, f, c, sol);
    return sol;
  }
  Eigen::VectorXd p = s;
  double gamma = s.squaredNorm();
  sol.converged = false;
  std::size_t k = 0;
  while (k < max_iter) {
    const Eigen::VectorXd q = detail::normal_apply(v, p);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) break;
    const double alpha = gamma / pq;
    c += alpha * p;
    s -= alpha * q;
    ++k;
    const double gamma_next = s.squaredNorm();
    if (std::sqrt(gamma_next) <= opt.tolerance * s0) {
      sol.converged = true;
      break;
    }
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }
  sol.iterations = k;
  sol.flop_count = static_cast<std::uint64_t>(per_iter * static_cast<double>(k));
  sol.coeffs = std::move(c);
  detail::residual_norms(v, f, sol.coeffs, sol);
  if (!sol.converged && sol.normal_residual_norm <= opt.tolerance * s0) sol.converged = true;
  return sol;
}

struct RekOptions {
  double eps = 1e-6;
  std::uint64_t seed = 0;
  /// Defaults to 10^6 * min(N, n+1).
  std::optional<std::size_t> max_iterations;
};

namespace detail {

/// Inverse-CDF sampling over a fixed discrete distribution.
class CumulativeTable {
public:
  explicit CumulativeTable(const std::vector<double>& masses) : cdf_(masses.size()) {
    std::partial_sum(masses.begin(), masses.end(), cdf_.begin());
  }
  std::size_t draw(double u) const {
    const double target = u * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

private:
  std::vector<double> cdf_;
};

}  // namespace detail

/// Randomized extended Kaczmarz.
///
/// z starts at f and c at 0. Each step draws a row i with probability
/// ||V(i,:)||^2 / ||V||_F^2 (uniform when all row norms are equal) and a column j
/// with probability ||V(:,j)||^2 / ||V||_F^2, projects V(:,j) out of z, and
/// takes the Kaczmarz step for row i against f_i - z_i, with z_i taken before
/// the projection. Every 8 min(N, n+1) steps it stops once both
///   ||V c - (f - z)|| / (||V||_F ||c||) <= eps  and  ||V^T z|| / (||V||_F ||c||) <= eps.
/// Memory beyond the oracle is O(N + n) (O(N) extra when rows must be drawn
/// by norm).
template <VandermondeOracle O>
LsqSolution solve_rek(const O& v, std::span<const double> f, const RekOptions& opt = {}) {
  const std::size_t n_rows = v.rows();
  const std::size_t n_cols = v.cols();
  if (f.size() != n_rows) throw DomainError("right-hand side length mismatch");
  if (!(opt.eps > 0.0)) throw DomainError("REK tolerance must be positive");

  const std::size_t period = 8 * std::min(n_rows, n_cols);
  const std::size_t max_iter = opt.max_iterations.value_or(1'000'000 * std::min(n_rows, n_cols));
  const std::vector<double>& col_sq = v.column_norms_sq();
  const double fro = std::sqrt(v.frobenius_norm_sq());
  const detail::CumulativeTable column_table(col_sq);
  std::optional<detail::CumulativeTable> row_table;
  if (!v.row_norms_equal()) {
    std::vector<double> row_sq(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) row_sq[i] = v.row_norm_sq(i);
    row_table.emplace(row_sq);
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_cols));
  std::vector<double> z(f.begin(), f.end());
  std::vector<double> col(n_rows);
  std::vector<double> row(n_cols);
  StreamEngine eng(opt.seed, 0x52454BULL);

  LsqSolution sol;
  sol.solver = SolverKind::rek;
  sol.converged = false;
  std::size_t k = 0;
  while (k < max_iter) {
    const std::size_t i = row_table ? row_table->draw(eng.uniform()) : eng.below(n_rows);
    const std::size_t j = column_table.draw(eng.uniform());

    const double z_i = z[i];
    if (col_sq[j] > 0.0) {
      v.column(j, col);
      double dot = 0.0;
      for (std::size_t r = 0; r < n_rows; ++r) dot += col[r] * z[r];
      const double alpha = dot / col_sq[j];
      for (std::size_t r = 0; r < n_rows; ++r) z[r] -= alpha * col[r];
    }

    v.row(i, row);
    double row_sq = 0.0;
    double rc = 0.0;
    for (std::size_t q = 0; q < n_cols; ++q) {
      row_sq += row[q] * row[q];
      rc += row[q] * c[static_cast<Eigen::Index>(q)];
    }
    if (row_sq > 0.0) {
      const double beta = (f[i] - z_i - rc) / row_sq;
      for (std::size_t q = 0; q < n_cols; ++q) c[static_cast<Eigen::Index>(q)] += beta * row[q];
    }
    ++k;

    if (k % period == 0) {
      double res_sq = 0.0;
      Eigen::VectorXd vtz = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_cols));
      for (std::size_t r = 0; r < n_rows; ++r) {
        v.row(r, row);
        double vc = 0.0;
        for (std::size_t q = 0; q < n_cols; ++q) {
          vc += row[q] * c[static_cast<Eigen::Index>(q)];
          vtz[static_cast<Eigen::Index>(q)] += row[q] * z[r];
        }
        const double d = vc - (f[r] - z[r]);
        res_sq += d * d;
      }
      const double scale = fro * std::max(c.norm(), 1e-30);
      sol.rek_residual = std::sqrt(res_sq) / scale;
      sol.rek_projection = vtz.norm() / scale;
      if (sol.rek_residual <= opt.eps && sol.rek_projection <= opt.eps) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.iterations = k;
  sol.flop_count = static_cast<std::uint64_t>(k) * (n_rows + n_cols);
  sol.coeffs = std::move(c);
  detail::residual_norms(v, f, sol.coeffs, sol);
  return sol;
}

/// kappa_2(V) = sigma_max / sigma_min from the singular values of V (through
/// its triangular factor when V is tall); +inf when sigma_min = 0.
inline double estimate_condition(const DenseVandermonde& v) {
  const Eigen::MatrixXd& m = v.matrix();
  Eigen::VectorXd sv;
  if (m.rows() > 2 * m.cols()) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
    sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  } else {
    sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  }
  if (sv.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = sv[sv.size() - 1];
  if (smin == 0.0 || m.rows() < m.cols()) return std::numeric_limits<double>::infinity();
  return sv[0] / smin;
}

inline constexpr double kConditionThreshold = 10.0;
inline constexpr double kDefaultStorableLimit = 1e8;

/// Not storable -> REK; storable and kappa <= 10 -> CG on the normal
/// equations; otherwise QR.
inline SolverKind select_solver(bool storable, std::optional<double> kappa_estimate,
                                double threshold = kConditionThreshold) {
  if (!storable) return SolverKind::rek;
  if (!kappa_estimate) throw DomainError("storable design requires a condition estimate");
  return *kappa_estimate <= threshold ? SolverKind::cg_normal : SolverKind::qr;
}

inline bool is_storable(std::size_t n_rows, std::size_t n_cols, double limit = kDefaultStorableLimit) {
  return static_cast<double>(n_rows) * static_cast<double>(n_cols) <= limit;
}

struct SolverConfig {
  SolverChoice choice = SolverChoice::automatic;
  double storable_limit = kDefaultStorableLimit;
  double kappa_threshold = kConditionThreshold;
  CgOptions cg;
  RekOptions rek;
};

/// Solve the weighted least-squares problem for `points` with the backend
/// chosen by `config`. Automatic selection stores sqrt(W) V when it has at
/// most `storable_limit` entries and picks CG or QR by its condition number;
/// larger designs are solved by REK without storing them. An explicit CG
/// choice on a large design runs matrix-free.
template <PointSet P>
LsqSolution solve_design(const BasisSet& basis, const P& points, std::span<const double> weighted_rhs,
                         const SolverConfig& config) {
  const bool storable = is_storable(points.size(), basis.size(), config.storable_limit);
  SolverChoice choice = config.choice;
  if (choice == SolverChoice::automatic && !storable) choice = SolverChoice::rek;
  if (!storable) {
    if (choice == SolverChoice::qr) {
      throw CapacityError("QR needs the stored design but N(n+1) exceeds the storable limit");
    }
    const ImplicitVandermonde<P> oracle(basis, points);
    if (choice == SolverChoice::cg) return solve_cg_normal(oracle, weighted_rhs, config.cg);
    return solve_rek(oracle, weighted_rhs, config.rek);
  }
  const DenseVandermonde dense = materialize(basis, points);
  std::optional<double> kappa;
  if (choice == SolverChoice::automatic) {
    kappa = estimate_condition(dense);
    choice = select_solver(true, kappa, config.kappa_threshold) == SolverKind::cg_normal ? SolverChoice::cg
                                                                                        : SolverChoice::qr;
  }
  LsqSolution sol;
  switch (choice) {
    case SolverChoice::qr: sol = solve_qr(dense, weighted_rhs); break;
    case SolverChoice::cg: sol = solve_cg_normal(dense, weighted_rhs, config.cg); break;
    default: sol = solve_rek(dense, weighted_rhs, config.rek); break;
  }
  sol.kappa_estimate = kappa;
  return sol;
}

}  // namespace mcls
