#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/error.hpp"
#include "mcls/rng.hpp"

namespace mcls {

// ---------------------------------------------------------------------------
// Model specifications

/// Lower-triangular L with L L^T = c for a symmetric positive semi-definite c.
/// Zero pivots are allowed; a negative pivot beyond `tol` is an error.
inline Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& c, double tol = 1e-12) {
  const Eigen::Index n = c.rows();
  if (c.cols() != n) throw DomainError("correlation matrix must be square");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = c(j, j) - l.row(j).head(j).squaredNorm();
    if (d < -tol) throw DomainError("correlation matrix is not positive semi-definite");
    d = std::max(d, 0.0);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double s = c(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      if (l(j, j) > tol) {
        l(i, j) = s / l(j, j);
      } else if (std::abs(s) > 1e-9) {
        throw DomainError("correlation matrix is not positive semi-definite");
      }
    }
  }
  return l;
}

struct BlackScholesSpec {
  std::size_t d = 1;
  Eigen::VectorXd s0;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd corr;
  double r = 0.0;
  Eigen::MatrixXd chol;

  static BlackScholesSpec make(Eigen::VectorXd s0, Eigen::VectorXd sigma, Eigen::MatrixXd corr, double r) {
    BlackScholesSpec s;
    s.d = static_cast<std::size_t>(s0.size());
    if (s.d == 0 || sigma.size() != s0.size() || corr.rows() != s0.size() || corr.cols() != s0.size()) {
      throw DomainError("Black-Scholes spec dimensions disagree");
    }
    for (Eigen::Index i = 0; i < s0.size(); ++i) {
      if (!(s0[i] > 0.0)) throw DomainError("initial prices must be positive");
      if (!(sigma[i] >= 0.0)) throw DomainError("volatilities must be non-negative");
      if (std::abs(corr(i, i) - 1.0) > 1e-12) throw DomainError("correlation diagonal must be 1");
    }
    if (!corr.isApprox(corr.transpose(), 1e-14)) throw DomainError("correlation matrix must be symmetric");
    s.s0 = std::move(s0);
    s.sigma = std::move(sigma);
    s.corr = std::move(corr);
    s.r = r;
    s.chol = psd_cholesky(s.corr);
    return s;
  }

  /// d uncorrelated assets with common s0 and sigma.
  static BlackScholesSpec uncorrelated(std::size_t d, double s0, double sigma, double r) {
    return make(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), s0),
                Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), sigma),
                Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)), r);
  }
};

struct HestonSpec {
  double kappa = 0.5;
  double theta = 0.01;
  double sigma = 0.15;
  double rho = -0.5;
  double r = 0.01;
  double v0 = 0.04;
  double x0 = 0.0;

  void validate() const {
    if (!(kappa >= 0.0 && theta >= 0.0 && sigma > 0.0 && r >= 0.0)) {
      throw DomainError("Heston parameters need kappa, theta, r >= 0 and sigma > 0");
    }
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("rho must lie in [-1,1]");
    if (!(v0 > 0.0)) throw DomainError("v0 must be positive");
  }
};

struct JacobiSpec {
  double kappa = 0.5;
  double theta = 0.04;
  double sigma = 0.15;
  double rho = -0.5;
  double r = 0.01;
  double v0 = 0.04;
  double x0 = 0.0;
  double vmin = 1e-4;
  double vmax = 0.08;

  void validate() const {
    if (!(kappa >= 0.0 && sigma > 0.0 && r >= 0.0)) throw DomainError("Jacobi parameters need kappa, r >= 0, sigma > 0");
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("rho must lie in [-1,1]");
    if (!(vmin >= 0.0 && vmin < vmax)) throw DomainError("need 0 <= vmin < vmax");
    if (!(theta >= vmin && theta <= vmax)) throw DomainError("theta must lie in [vmin, vmax]");
    if (!(v0 >= vmin && v0 <= vmax)) throw DomainError("v0 must lie in [vmin, vmax]");
  }

  double q(double v) const {
    const double s = std::sqrt(vmax) - std::sqrt(vmin);
    return (v - vmin) * (vmax - v) / (s * s);
  }
};

/// Independent vols uniform on (0, hi) drawn from a fixed stream.
inline Eigen::VectorXd random_volatilities(std::size_t d, std::uint64_t seed, double hi = 0.5) {
  StreamEngine eng(seed, 0x766F6CULL);
  Eigen::VectorXd s(static_cast<Eigen::Index>(d));
  for (auto& v : s) v = hi * eng.open_uniform();
  return s;
}

/// Correlation matrix D^{-1/2} A A^T D^{-1/2} for a d x d Gaussian A from a
/// fixed stream.
inline Eigen::MatrixXd random_correlation(std::size_t d, std::uint64_t seed) {
  StreamEngine eng(seed, 0x636F72ULL);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(eng);
  Eigen::MatrixXd c = a * a.transpose();
  const Eigen::VectorXd inv = c.diagonal().cwiseSqrt().cwiseInverse();
  c = inv.asDiagonal() * c * inv.asDiagonal();
  c.diagonal().setOnes();
  return 0.5 * (c + c.transpose());
}

// ---------------------------------------------------------------------------
// Simulation

/// S_T^i = s0_i exp((r - sigma_i^2/2) T + sigma_i sqrt(T) (L z)_i).
inline void gbm_sample_terminal(const BlackScholesSpec& spec, double t, std::span<const double> z,
                                std::span<double> out) {
  if (!(t > 0.0)) throw DomainError("maturity must be positive");
  const auto d = static_cast<Eigen::Index>(spec.d);
  const double sq = std::sqrt(t);
  for (Eigen::Index i = 0; i < d; ++i) {
    double w = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) w += spec.chol(i, j) * z[static_cast<std::size_t>(j)];
    const double s = spec.sigma[i];
    out[static_cast<std::size_t>(i)] = spec.s0[i] * std::exp((spec.r - 0.5 * s * s) * t + s * sq * w);
  }
}

inline std::vector<double> gbm_sample_terminal(const BlackScholesSpec& spec, double t, std::span<const double> z) {
  std::vector<double> out(spec.d);
  gbm_sample_terminal(spec, t, z, out);
  return out;
}

/// X_{i+1} = X_i + b(X_i) dt + Sigma(X_i) sqrt(dt) z_i on a uniform grid.
/// `drift(x, out)` fills b(x); `diffusion(x, out)` fills Sigma(x) as a
/// row-major dim x noise_dim matrix. z holds ns * noise_dim normals.
template <class Drift, class Diffusion>
std::vector<double> euler_maruyama(const Drift& drift, const Diffusion& diffusion, std::span<const double> x0,
                                   double t, std::size_t ns, std::size_t noise_dim, std::span<const double> z) {
  if (ns < 1) throw DomainError("need at least one time step");
  if (!(t > 0.0)) throw DomainError("maturity must be positive");
  if (z.size() != ns * noise_dim) throw DomainError("need ns * noise_dim normals");
  const std::size_t dim = x0.size();
  const double dt = t / static_cast<double>(ns);
  const double sdt = std::sqrt(dt);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> b(dim);
  std::vector<double> s(dim * noise_dim);
  for (std::size_t step = 0; step < ns; ++step) {
    drift(std::span<const double>(x), std::span<double>(b));
    diffusion(std::span<const double>(x), std::span<double>(s));
    const double* zi = z.data() + step * noise_dim;
    for (std::size_t i = 0; i < dim; ++i) {
      double inc = b[i] * dt;
      for (std::size_t k = 0; k < noise_dim; ++k) inc += s[i * noise_dim + k] * sdt * zi[k];
      x[i] += inc;
      if (!std::isfinite(x[i])) throw BlowUpError(step + 1);
    }
  }
  return x;
}

struct VolState {
  double v = 0.0;
  double x = 0.0;
};

/// Number of square-root arguments that were negative and replaced by 0.
struct ClampCounter {
  std::uint64_t events = 0;
  double positive_part(double a) {
    if (a < 0.0) {
      ++events;
      return 0.0;
    }
    return a;
  }
};

inline VolState heston_step(const HestonSpec& p, VolState s, double dt, double z1, double z2, ClampCounter& clamps) {
  const double sdt = std::sqrt(dt);
  const double sv = std::sqrt(clamps.positive_part(s.v));
  VolState n;
  n.v = s.v + p.kappa * (p.theta - s.v) * dt + p.sigma * sv * sdt * z1;
  n.x = s.x + (p.r - 0.5 * s.v) * dt + p.rho * sv * sdt * z1 + sv * std::sqrt(1.0 - p.rho * p.rho) * sdt * z2;
  return n;
}

inline VolState jacobi_step(const JacobiSpec& p, VolState s, double dt, double z1, double z2, ClampCounter& clamps) {
  const double sdt = std::sqrt(dt);
  const double q = clamps.positive_part(p.q(s.v));
  const double sq = std::sqrt(q);
  VolState n;
  n.v = s.v + p.kappa * (p.theta - s.v) * dt + p.sigma * sq * sdt * z1;
  n.x = s.x + (p.r - 0.5 * s.v) * dt + p.rho * sq * sdt * z1 +
        std::sqrt(clamps.positive_part(s.v - p.rho * p.rho * q)) * sdt * z2;
  return n;
}

inline VolState initial_state(const HestonSpec& p) { return {p.v0, p.x0}; }
inline VolState initial_state(const JacobiSpec& p) { return {p.v0, p.x0}; }
inline VolState model_step(const HestonSpec& p, VolState s, double dt, double z1, double z2, ClampCounter& c) {
  return heston_step(p, s, dt, z1, z2, c);
}
inline VolState model_step(const JacobiSpec& p, VolState s, double dt, double z1, double z2, ClampCounter& c) {
  return jacobi_step(p, s, dt, z1, z2, c);
}

template <class Spec>
concept StochasticVolSpec = requires(const Spec& p, VolState s, ClampCounter& c) {
  { initial_state(p) } -> std::same_as<VolState>;
  { model_step(p, s, 1.0, 0.0, 0.0, c) } -> std::same_as<VolState>;
};

/// Terminal (V_T, X_T) of the Euler-Maruyama scheme driven by `eng`.
template <StochasticVolSpec Spec>
VolState simulate_terminal(const Spec& p, double t, std::size_t ns, StreamEngine& eng, ClampCounter& clamps) {
  if (ns < 1) throw DomainError("need at least one time step");
  std::normal_distribution<double> normal;
  const double dt = t / static_cast<double>(ns);
  VolState s = initial_state(p);
  for (std::size_t i = 0; i < ns; ++i) {
    const double z1 = normal(eng);
    const double z2 = normal(eng);
    s = model_step(p, s, dt, z1, z2, clamps);
    if (!std::isfinite(s.v) || !std::isfinite(s.x)) throw BlowUpError(i + 1);
  }
  return s;
}

/// PointSampler for the terminal state of a stochastic volatility model.
/// With `log_price_only` the point is X_T alone, otherwise (V_T, X_T).
template <StochasticVolSpec Spec>
struct StochasticVolSampler {
  Spec spec;
  double maturity = 1.0;
  std::size_t steps = 100;
  bool log_price_only = true;

  std::size_t dimension() const noexcept { return log_price_only ? 1 : 2; }
  void operator()(StreamEngine& eng, std::span<double> out) const {
    ClampCounter clamps;
    const VolState s = simulate_terminal(spec, maturity, steps, eng, clamps);
    if (log_price_only) {
      out[0] = s.x;
    } else {
      out[0] = s.v;
      out[1] = s.x;
    }
  }
};

/// PointSampler for exact terminal prices in the multivariate Black-Scholes model.
struct BlackScholesSampler {
  BlackScholesSpec spec;
  double maturity = 1.0;

  std::size_t dimension() const noexcept { return spec.d; }
  void operator()(StreamEngine& eng, std::span<double> out) const {
    std::normal_distribution<double> normal;
    thread_local std::vector<double> z;
    z.resize(spec.d);
    for (double& v : z) v = normal(eng);
    gbm_sample_terminal(spec, maturity, z, out);
  }
};

// ---------------------------------------------------------------------------
// Polynomial diffusions and the moment formula

/// Sparse polynomial: exponent tuple -> coefficient.
using Polynomial = std::map<std::vector<int>, double>;

inline Polynomial poly_monomial(std::size_t dim, std::size_t var, int power, double coeff = 1.0) {
  std::vector<int> e(dim, 0);
  e[var] = power;
  return {{e, coeff}};
}

inline Polynomial poly_constant(std::size_t dim, double c) { return {{std::vector<int>(dim, 0), c}}; }

inline Polynomial operator+(Polynomial a, const Polynomial& b) {
  for (const auto& [e, c] : b) a[e] += c;
  return a;
}

inline Polynomial operator*(double s, Polynomial a) {
  for (auto& [e, c] : a) c *= s;
  return a;
}

inline Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      out[e] += ca * cb;
    }
  return out;
}

/// dX = b(X) dt + Sigma(X) dW with polynomial drift b and covariance a = Sigma Sigma^T.
struct PolynomialDiffusion {
  std::size_t dimension = 0;
  std::vector<Polynomial> drift;
  std::vector<std::vector<Polynomial>> covariance;
  std::vector<double> initial_state;
};

/// State (v, x) with dV = kappa(theta - V)dt + sigma sqrt(V) dW1, dX = (r - V/2)dt + sqrt(V) dW*.
inline PolynomialDiffusion heston_diffusion(const HestonSpec& p) {
  p.validate();
  PolynomialDiffusion m;
  m.dimension = 2;
  const Polynomial v = poly_monomial(2, 0, 1);
  m.drift = {poly_constant(2, p.kappa * p.theta) + (-p.kappa) * v, poly_constant(2, p.r) + (-0.5) * v};
  const Polynomial avx = (p.rho * p.sigma) * v;
  m.covariance = {{(p.sigma * p.sigma) * v, avx}, {avx, v}};
  m.initial_state = {p.v0, p.x0};
  return m;
}

inline Polynomial jacobi_q(const JacobiSpec& p) {
  const double s = std::sqrt(p.vmax) - std::sqrt(p.vmin);
  const double c = 1.0 / (s * s);
  return poly_constant(2, -p.vmin * p.vmax * c) + poly_monomial(2, 0, 1, (p.vmin + p.vmax) * c) +
         poly_monomial(2, 0, 2, -c);
}

inline PolynomialDiffusion jacobi_diffusion(const JacobiSpec& p) {
  p.validate();
  PolynomialDiffusion m;
  m.dimension = 2;
  const Polynomial v = poly_monomial(2, 0, 1);
  const Polynomial q = jacobi_q(p);
  m.drift = {poly_constant(2, p.kappa * p.theta) + (-p.kappa) * v, poly_constant(2, p.r) + (-0.5) * v};
  const Polynomial avx = (p.rho * p.sigma) * q;
  m.covariance = {{(p.sigma * p.sigma) * q, avx}, {avx, v}};
  m.initial_state = {p.v0, p.x0};
  return m;
}

/// Prices S with dS_i = r S_i dt + sigma_i S_i dW_i, d<W_i, W_j> = rho_ij dt.
inline PolynomialDiffusion bs_diffusion(const BlackScholesSpec& spec) {
  PolynomialDiffusion m;
  m.dimension = spec.d;
  m.covariance.assign(spec.d, std::vector<Polynomial>(spec.d));
  for (std::size_t i = 0; i < spec.d; ++i) {
    m.drift.push_back(poly_monomial(spec.d, i, 1, spec.r));
    for (std::size_t j = 0; j < spec.d; ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double c = spec.sigma[ii] * spec.sigma[jj] * spec.corr(ii, jj);
      m.covariance[i][j] = poly_monomial(spec.d, i, 1, c) * poly_monomial(spec.d, j, 1);
    }
  }
  m.initial_state.assign(spec.s0.begin(), spec.s0.end());
  return m;
}

enum class GeneratorStructure { diagonal, triangular_block, dense };

inline std::string to_string(GeneratorStructure s) {
  switch (s) {
    case GeneratorStructure::diagonal: return "diagonal";
    case GeneratorStructure::triangular_block: return "triangular-block";
    case GeneratorStructure::dense: return "dense";
  }
  return "?";
}

/// Matrix of the generator on monomials of total degree <= n in graded order;
/// column k holds the coefficients of G applied to monomial k.
struct GeneratorMatrix {
  int degree = 0;
  std::size_t state_dimension = 0;
  std::vector<MultiIndex> indices;
  Eigen::MatrixXd g;
  GeneratorStructure structure = GeneratorStructure::dense;

  std::size_t size() const noexcept { return indices.size(); }

  std::size_t position(const MultiIndex& a) const {
    if (a.dimension() != state_dimension || a.total_degree() > degree) {
      throw DomainError("monomial outside the generator's space");
    }
    const auto it = std::lower_bound(indices.begin(), indices.end(), a, graded_less);
    return static_cast<std::size_t>(it - indices.begin());
  }

  /// Order used by enumerate_multi_indices: total degree, then descending lex.
  static bool graded_less(const MultiIndex& a, const MultiIndex& b) {
    const int da = a.total_degree();
    const int db = b.total_degree();
    if (da != db) return da < db;
    return a.exponents > b.exponents;
  }
};

inline GeneratorStructure classify_generator(const Eigen::MatrixXd& g, const std::vector<MultiIndex>& idx) {
  bool diagonal = true;
  bool triangular = true;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (g(i, j) == 0.0) continue;
      if (i != j) diagonal = false;
      if (idx[static_cast<std::size_t>(i)].total_degree() > idx[static_cast<std::size_t>(j)].total_degree()) {
        triangular = false;
      }
    }
  if (diagonal) return GeneratorStructure::diagonal;
  return triangular ? GeneratorStructure::triangular_block : GeneratorStructure::dense;
}

/// Applies G p = sum_i b_i d_i p + 1/2 sum_ij a_ij d_i d_j p to each monomial.
inline GeneratorMatrix build_generator_poly(const PolynomialDiffusion& model, int n) {
  if (n < 0) throw DomainError("generator degree must be non-negative");
  GeneratorMatrix out;
  out.degree = n;
  out.state_dimension = model.dimension;
  out.indices = enumerate_multi_indices(model.dimension, n);
  const auto m = static_cast<Eigen::Index>(out.indices.size());
  out.g = Eigen::MatrixXd::Zero(m, m);

  auto add = [&](Eigen::Index col, const Polynomial& coeff, std::vector<int> e, double scale) {
    for (const auto& [ce, c] : coeff) {
      MultiIndex t{e};
      for (std::size_t k = 0; k < e.size(); ++k) t.exponents[k] += ce[k];
      if (t.total_degree() > n) {
        if (c * scale != 0.0) throw DomainError("generator raises polynomial degree: not a polynomial diffusion");
        continue;
      }
      out.g(static_cast<Eigen::Index>(out.position(t)), col) += c * scale;
    }
  };

  const std::size_t dim = model.dimension;
  for (Eigen::Index col = 0; col < m; ++col) {
    const std::vector<int>& a = out.indices[static_cast<std::size_t>(col)].exponents;
    for (std::size_t i = 0; i < dim; ++i) {
      if (a[i] == 0) continue;
      std::vector<int> e = a;
      e[i] -= 1;
      add(col, model.drift[i], e, a[i]);
    }
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        std::vector<int> e = a;
        double f = 0.0;
        if (i == j) {
          if (a[i] < 2) continue;
          f = a[i] * (a[i] - 1.0);
          e[i] -= 2;
        } else {
          if (a[i] == 0 || a[j] == 0) continue;
          f = static_cast<double>(a[i]) * a[j];
          e[i] -= 1;
          e[j] -= 1;
        }
        add(col, model.covariance[i][j], e, 0.5 * f);
      }
  }
  out.structure = classify_generator(out.g, out.indices);
  return out;
}

/// Diagonal generator of the multivariate Black-Scholes model:
/// G_kk = 1/2 sum_ij sigma_i sigma_j rho_ij (k_i k_j [i != j] + k_i (k_i - 1) [i = j]) + r sum_i k_i.
inline GeneratorMatrix build_generator_bs(const BlackScholesSpec& spec, int n) {
  if (n < 0) throw DomainError("generator degree must be non-negative");
  GeneratorMatrix out;
  out.degree = n;
  out.state_dimension = spec.d;
  out.indices = enumerate_multi_indices(spec.d, n);
  const auto m = static_cast<Eigen::Index>(out.indices.size());
  out.g = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const std::vector<int>& k = out.indices[static_cast<std::size_t>(p)].exponents;
    double s = 0.0;
    int total = 0;
    for (std::size_t i = 0; i < spec.d; ++i) {
      total += k[i];
      for (std::size_t j = 0; j < spec.d; ++j) {
        const double kk = i == j ? k[i] * (k[i] - 1.0) : static_cast<double>(k[i]) * k[j];
        s += spec.sigma[static_cast<Eigen::Index>(i)] * spec.sigma[static_cast<Eigen::Index>(j)] *
             spec.corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * kk;
      }
    }
    out.g(p, p) = 0.5 * s + spec.r * total;
  }
  out.structure = GeneratorStructure::diagonal;
  return out;
}

/// exp(G t); entrywise on the diagonal for diagonal generators, otherwise
/// Pade scaling and squaring.
inline Eigen::MatrixXd generator_exponential(const GeneratorMatrix& g, double t) {
  Eigen::MatrixXd e;
  if (g.structure == GeneratorStructure::diagonal) {
    e = Eigen::MatrixXd::Zero(g.g.rows(), g.g.cols());
    for (Eigen::Index i = 0; i < g.g.rows(); ++i) e(i, i) = std::exp(g.g(i, i) * t);
  } else {
    e = (g.g * t).exp();
  }
  if (!e.allFinite()) throw Error("matrix exponential is not finite");
  return e;
}

/// Row H_n(x0) of monomials at the initial state.
inline Eigen::RowVectorXd monomial_row(const GeneratorMatrix& g, std::span<const double> x0) {
  if (x0.size() != g.state_dimension) throw DomainError("initial state dimension mismatch");
  Eigen::RowVectorXd h(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    double v = 1.0;
    for (std::size_t i = 0; i < x0.size(); ++i) v *= std::pow(x0[i], g.indices[k][i]);
    h[static_cast<Eigen::Index>(k)] = v;
  }
  return h;
}

/// E[p(X_T)] = H_n(x0) exp(G T) p.
inline double moment(const GeneratorMatrix& g, const Eigen::VectorXd& p, double t, std::span<const double> x0) {
  if (t < 0.0) throw DomainError("maturity must be non-negative");
  if (p.size() != static_cast<Eigen::Index>(g.size())) throw DomainError("coefficient vector size mismatch");
  return monomial_row(g, x0) * generator_exponential(g, t) * p;
}

/// All monomial moments E[X_T^a], |a| <= n, from one matrix exponential.
class MomentTable {
public:
  MomentTable(GeneratorMatrix g, double t, std::span<const double> x0) : g_(std::move(g)) {
    if (t < 0.0) throw DomainError("maturity must be non-negative");
    h_ = monomial_row(g_, x0) * generator_exponential(g_, t);
  }

  const GeneratorMatrix& generator() const noexcept { return g_; }
  double operator()(const MultiIndex& a) const { return h_[static_cast<Eigen::Index>(g_.position(a))]; }
  double operator()(const Eigen::VectorXd& p) const { return h_ * p; }

private:
  GeneratorMatrix g_;
  Eigen::RowVectorXd h_;
};

inline MomentTable moment_table(const PolynomialDiffusion& model, int n, double t) {
  return MomentTable(build_generator_poly(model, n), t, model.initial_state);
}

/// Inner product of univariate log-price monomials under the law of X_T:
/// E[x^a] is the moment of the (v, x) monomial v^0 x^a.
inline InnerProductOracle log_price_oracle(const PolynomialDiffusion& model, int max_degree, double t) {
  if (model.dimension != 2) throw DomainError("log-price oracle needs a (v, x) model");
  auto table = std::make_shared<MomentTable>(moment_table(model, max_degree, t));
  InnerProductOracle ip;
  ip.dimension = 1;
  ip.max_total_degree = max_degree;
  ip.moment = [table](const MultiIndex& a) { return (*table)(MultiIndex{{0, a.exponents.at(0)}}); };
  return ip;
}

/// Exact integrals of a monomial basis under the Black-Scholes terminal law.
inline std::vector<double> bs_monomial_integrals(const BlackScholesSpec& spec, const BasisSet& basis, double t) {
  if (basis.kind() != BasisKind::monomial || basis.dimension() != spec.d) {
    throw DomainError("need a monomial basis in the asset prices");
  }
  const MomentTable table(build_generator_bs(spec, basis.max_degree()), t,
                          std::vector<double>(spec.s0.begin(), spec.s0.end()));
  std::vector<double> m(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) m[j] = table(basis.indices()[j]);
  return m;
}

}  // namespace mcls
