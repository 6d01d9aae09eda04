#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/rng.hpp"

using namespace mcls;

namespace {

// 30-point Gauss-Legendre on [0,1]; exact for polynomials of degree <= 59.
template <class F>
double quad01(F f) {
  return boost::math::quadrature::gauss<double, 30>::integrate([&](double x) { return f(x); }, 0.0, 1.0);
}

double binom(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

TEST(MultiIndex, CountMatchesBinomial) {
  for (std::size_t d = 1; d <= 6; ++d)
    for (int deg = 0; deg <= 6; ++deg) {
      EXPECT_EQ(multi_index_count(d, deg), static_cast<std::size_t>(binom(static_cast<int>(d) + deg, deg)));
      EXPECT_EQ(enumerate_multi_indices(d, deg).size(), multi_index_count(d, deg));
    }
  EXPECT_EQ(multi_index_count(10, 5), 3003u);
  EXPECT_EQ(multi_index_count(20, 2), 231u);
  EXPECT_EQ(multi_index_count(5, 5), 252u);
}

TEST(MultiIndex, GradedOrderWithDescendingLexTies) {
  const auto idx = enumerate_multi_indices(2, 2);
  const std::vector<std::vector<int>> expected = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  ASSERT_EQ(idx.size(), expected.size());
  for (std::size_t j = 0; j < idx.size(); ++j) EXPECT_EQ(idx[j].exponents, expected[j]);
}

TEST(MultiIndex, EnumerationIsDistinctAndBounded) {
  const auto idx = enumerate_multi_indices(4, 4);
  std::set<std::vector<int>> seen;
  int prev = 0;
  for (const auto& a : idx) {
    EXPECT_TRUE(seen.insert(a.exponents).second);
    EXPECT_LE(a.total_degree(), 4);
    EXPECT_GE(a.total_degree(), prev);
    prev = a.total_degree();
  }
}

TEST(MultiIndex, RejectsBadArguments) {
  EXPECT_THROW(enumerate_multi_indices(0, 2), DomainError);
  EXPECT_THROW(enumerate_multi_indices(2, -1), DomainError);
  EXPECT_THROW(multi_index_count(200, 40), CapacityError);
}

TEST(Legendre, EndpointValue) {
  // L_1(1) = sqrt(3) under the orthonormal scaling.
  EXPECT_NEAR(shifted_legendre(1, 1.0), 1.7320508075688772, 1e-15);
  EXPECT_DOUBLE_EQ(shifted_legendre(0, 0.3), 1.0);
  for (int m = 0; m <= 10; ++m) EXPECT_NEAR(shifted_legendre(m, 1.0), std::sqrt(2.0 * m + 1.0), 1e-12);
}

TEST(Legendre, OrthonormalUnderQuadrature) {
  for (int a = 0; a <= 12; ++a)
    for (int b = 0; b <= 12; ++b) {
      const double ip = quad01([&](double x) { return shifted_legendre(a, x) * shifted_legendre(b, x); });
      EXPECT_NEAR(ip, a == b ? 1.0 : 0.0, 1e-12) << a << "," << b;
    }
}

TEST(Legendre, ValuesAgreeWithSingleEvaluation) {
  std::vector<double> v(9);
  for (double x : {0.0, 0.1, 0.5, 0.77, 1.0}) {
    shifted_legendre_values(x, v);
    for (int m = 0; m < 9; ++m) EXPECT_NEAR(v[static_cast<std::size_t>(m)], shifted_legendre(m, x), 1e-13);
  }
}

TEST(BasisSet, TensorLegendreOrthonormalInTwoDimensions) {
  const BasisSet b = BasisSet::tensor_legendre(2, 3);
  const std::size_t m = b.size();
  std::vector<double> gram(m * m, 0.0);
  const auto& nodes = boost::math::quadrature::gauss<double, 30>::abscissa();
  const auto& wts = boost::math::quadrature::gauss<double, 30>::weights();
  // Expand the symmetric half-rule to the full [-1,1] rule, then map to [0,1].
  std::vector<std::pair<double, double>> rule;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    rule.emplace_back(0.5 * (1.0 + nodes[i]), 0.5 * wts[i]);
    if (nodes[i] != 0.0) rule.emplace_back(0.5 * (1.0 - nodes[i]), 0.5 * wts[i]);
  }
  for (const auto& [x, wx] : rule)
    for (const auto& [y, wy] : rule) {
      const std::vector<double> p{x, y};
      const auto row = b.eval_row(p);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) gram[i * m + j] += wx * wy * row[i] * row[j];
    }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(gram[i * m + j], i == j ? 1.0 : 0.0, 1e-12);
}

TEST(BasisSet, FirstFunctionIsConstantOne) {
  for (const BasisSet& b : {BasisSet::tensor_legendre(3, 2), BasisSet::monomial(3, 2)}) {
    EXPECT_DOUBLE_EQ(b.eval(0, std::vector<double>{0.2, 0.4, 0.9}), 1.0);
  }
}

TEST(BasisSet, RowEvaluationMatchesFactorProducts) {
  StreamEngine eng(5, 0);
  for (const BasisSet& b : {BasisSet::tensor_legendre(5, 4), BasisSet::monomial(5, 4),
                            BasisSet::tensor_legendre(5, 4).prefix(77)}) {
    std::vector<double> x(5);
    for (int rep = 0; rep < 20; ++rep) {
      for (double& v : x) v = eng.uniform();
      const auto row = b.eval_row(x);
      for (std::size_t j = 0; j < b.size(); ++j) {
        double direct = 1.0;
        for (std::size_t k = 0; k < 5; ++k) direct *= b.univariate(b.indices()[j][k], x[k]);
        EXPECT_NEAR(row[j], direct, 1e-12 * std::max(1.0, std::abs(direct)));
      }
    }
  }
}

TEST(BasisSet, DomainChecks) {
  const BasisSet b = BasisSet::tensor_legendre(2, 2);
  EXPECT_THROW(b.eval_row(std::vector<double>{0.5, 1.5}), DomainError);
  EXPECT_THROW(b.eval_row(std::vector<double>{0.5}), DomainError);
  EXPECT_THROW(b.eval(99, std::vector<double>{0.5, 0.5}), DomainError);
  // Monomials have no cube restriction.
  EXPECT_NO_THROW(BasisSet::monomial(2, 2).eval_row(std::vector<double>{-3.0, 7.0}));
}

TEST(BasisSet, PrefixKeepsLeadingFunctions) {
  const BasisSet full = BasisSet::tensor_legendre(3, 3);
  const BasisSet p = full.prefix(7);
  ASSERT_EQ(p.size(), 7u);
  for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(p.indices()[j], full.indices()[j]);
  EXPECT_THROW(full.prefix(0), DomainError);
  EXPECT_THROW(full.prefix(full.size() + 1), DomainError);
}

TEST(GramSchmidt, LebesgueMomentsReproduceLegendre) {
  const BasisSet gs = gram_schmidt(BasisSet::monomial(1, 6), lebesgue_cube_moments(1, 12));
  EXPECT_EQ(gs.kind(), BasisKind::gram_schmidt);
  for (double x : {0.0, 0.13, 0.5, 0.91, 1.0}) {
    const auto row = gs.eval_row(std::vector<double>{x});
    // The degree-6 monomial Gram matrix has condition number near 5e8.
    for (int m = 0; m <= 6; ++m) EXPECT_NEAR(row[static_cast<std::size_t>(m)], shifted_legendre(m, x), 1e-7);
  }
}

TEST(GramSchmidt, OrthonormalUnderItsOracle) {
  const auto ip = lebesgue_cube_moments(2, 8);
  const BasisSet gs = gram_schmidt(BasisSet::monomial(2, 4), ip);
  const Eigen::MatrixXd g = orthonormality_defect_matrix(gs, ip);
  EXPECT_LE((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GramSchmidt, DegenerateMeasureIsRejected) {
  // Dirac mass at 1/2: x - 1/2 has zero norm.
  InnerProductOracle dirac{1, 4, [](const MultiIndex& a) { return std::pow(0.5, a.total_degree()); }};
  try {
    gram_schmidt(BasisSet::monomial(1, 2), dirac);
    FAIL() << "expected IllConditionedMoments";
  } catch (const IllConditionedMoments& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

TEST(GramSchmidt, RequiresDoubleDegreeMoments) {
  EXPECT_THROW(gram_schmidt(BasisSet::monomial(1, 3), lebesgue_cube_moments(1, 5)), DomainError);
  EXPECT_THROW(gram_schmidt(BasisSet::tensor_legendre(1, 2), lebesgue_cube_moments(1, 4)), DomainError);
}

TEST(GramSchmidt, PrefixIsNotAvailable) {
  const BasisSet gs = gram_schmidt(BasisSet::monomial(1, 2), lebesgue_cube_moments(1, 4));
  EXPECT_THROW(gs.prefix(2), DomainError);
}
