#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/estimator.hpp"
#include "mcls/sampling.hpp"

using namespace mcls;

namespace {

constexpr double kOneMinusCos1 = 0.4596976941318602826;

double plain_mean(const WeightedSampleBatch& b, double (*f)(double)) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += f(b.coordinate(i, 0));
  return s / static_cast<double>(b.size());
}

}  // namespace

TEST(Estimator, DegreeZeroEqualsPlainMean) {
  const BasisSet b = BasisSet::tensor_legendre(1, 0);
  const auto batch = sample_plain(UniformCube{1}, 5000, 3);
  auto f = [](std::span<const double> x) { return std::exp(x[0]) * std::cos(7.0 * x[0]); };
  const MclsEstimate e = mcls_estimate(f, b, batch, IntegralTable::orthonormal(1));
  double mean = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) mean += f(batch.point(i));
  mean /= static_cast<double>(batch.size());
  EXPECT_LE(std::abs(e.value - mean), 4.0 * std::numeric_limits<double>::epsilon() * 5000 * std::abs(mean));
  EXPECT_EQ(e.n, 0u);
}

TEST(Estimator, PolynomialInSpanIsIntegratedExactly) {
  const BasisSet b = BasisSet::tensor_legendre(2, 3);
  auto f = [](std::span<const double> x) { return 1.0 + x[0] * x[0] * x[1] - 2.0 * x[1] * x[1] * x[1]; };
  const double exact = 1.0 + 1.0 / 6.0 - 0.5;
  for (const WeightedSampleBatch& batch : {sample_plain(UniformCube{2}, 50, 1), sample_optimal(b, 50, 2)}) {
    const MclsEstimate e = mcls_estimate(f, b, batch, IntegralTable::orthonormal(b.size()));
    EXPECT_NEAR(e.value, exact, 1e-8);
    EXPECT_LE(e.sigma_ls, 1e-8);
  }
}

TEST(Estimator, MonomialBasisUsesMomentTable) {
  const BasisSet b = BasisSet::monomial(1, 2);
  const auto table = IntegralTable::from_moments({1.0, 0.5, 1.0 / 3.0});
  const auto batch = sample_plain(UniformCube{1}, 40, 4);
  auto f = [](std::span<const double> x) { return 2.0 - x[0] + 3.0 * x[0] * x[0]; };
  const MclsEstimate e = mcls_estimate(f, b, batch, table);
  EXPECT_NEAR(e.value, 2.0 - 0.5 + 1.0, 1e-10);
}

TEST(Estimator, SmoothIntegrandBeatsMcOnSameBatch) {
  const BasisSet b = BasisSet::tensor_legendre(1, 5);
  const auto batch = sample_plain(UniformCube{1}, 10000, 5);
  auto f = [](std::span<const double> x) { return std::sin(x[0]); };
  const MclsEstimate e = mcls_estimate(f, b, batch, IntegralTable::orthonormal(b.size()));
  const double mc_error = std::abs(plain_mean(batch, [](double x) { return std::sin(x); }) - kOneMinusCos1);
  EXPECT_LE(100.0 * std::abs(e.value - kOneMinusCos1), mc_error);
}

TEST(Estimator, CiContainsValue) {
  const BasisSet b = BasisSet::tensor_legendre(1, 2);
  const auto batch = sample_optimal(b, 300, 6);
  const MclsEstimate e = mcls_estimate([](std::span<const double> x) { return std::exp(x[0]); }, b, batch,
                                       IntegralTable::orthonormal(b.size()));
  EXPECT_LE(e.ci_low, e.value);
  EXPECT_GE(e.ci_high, e.value);
  EXPECT_GE(e.sigma_ls, 0.0);
  EXPECT_EQ(e.law, SampleLaw::optimal_weighted);
}

TEST(Estimator, NonFiniteIntegrandNamesSample) {
  const BasisSet b = BasisSet::tensor_legendre(1, 1);
  const auto batch = sample_plain(UniformCube{1}, 20, 7);
  std::vector<double> f(20, 1.0);
  f[13] = std::numeric_limits<double>::quiet_NaN();
  try {
    mcls_estimate_values(f, b, batch, IntegralTable::orthonormal(2));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.index(), 13u);
  }
}

TEST(Estimator, NeedsMoreSamplesThanFunctions) {
  const BasisSet b = BasisSet::tensor_legendre(1, 4);
  const auto batch = sample_plain(UniformCube{1}, 5, 8);
  std::vector<double> f(5, 1.0);
  EXPECT_THROW(mcls_estimate_values(f, b, batch, IntegralTable::orthonormal(5)), DegreesOfFreedomError);
  EXPECT_THROW(mcls_estimate_values(f, b, batch, IntegralTable::orthonormal(4)), DomainError);
}

TEST(VarianceEstimate, Examples) {
  const std::vector<double> zeros(10, 0.0);
  const std::vector<double> ones(10, 1.0);
  EXPECT_EQ(variance_estimate(zeros, ones, 10, 2), 0.0);

  // w = 1, n = 0: residuals about the mean give the unbiased sample variance.
  const std::vector<double> f{1.0, 2.0, 4.0, 7.0};
  const double mean = 3.5;
  std::vector<double> r;
  for (double v : f) r.push_back(v - mean);
  const std::vector<double> w1(4, 1.0);
  EXPECT_NEAR(variance_estimate(r, w1, 4, 0), (6.25 + 2.25 + 0.25 + 12.25) / 3.0, 1e-14);

  // constant residual r and weight w: w^2 r^2 N / (N - n - 1)
  const std::vector<double> rc(10, 0.5);
  const std::vector<double> wc(10, 3.0);
  EXPECT_NEAR(variance_estimate(rc, wc, 10, 2), 9.0 * 0.25 * 10.0 / 7.0, 1e-14);

  EXPECT_THROW(variance_estimate(ones, ones, 10, 9), DegreesOfFreedomError);
}

TEST(ConfidenceInterval, Examples) {
  const auto [lo, hi] = confidence_interval(1.0, 1.0, 10000);
  EXPECT_NEAR(lo, 0.9804, 1e-15);
  EXPECT_NEAR(hi, 1.0196, 1e-15);
  const auto [a, b] = confidence_interval(2.5, 0.0, 17);
  EXPECT_EQ(a, 2.5);
  EXPECT_EQ(b, 2.5);
  const auto w1 = confidence_interval(0.0, 0.3, 100);
  const auto w4 = confidence_interval(0.0, 0.3, 400);
  EXPECT_NEAR(w1.second - w1.first, 2.0 * (w4.second - w4.first), 1e-15);
  const auto c99 = confidence_interval(0.0, 1.0, 1, 0.99);
  EXPECT_NEAR(c99.second, 2.5758293035489, 1e-10);
  EXPECT_THROW(confidence_interval(0.0, -1.0, 10), DomainError);
}

TEST(ErrorRatio, Examples) {
  EXPECT_DOUBLE_EQ(error_ratio(0.3, 0.3, 0, 1.0, 1.0), 1.0);
  EXPECT_NEAR(error_ratio(1.0, 0.01, 99, 1.0, 1.0), 10.0, 1e-12);
  double prev = error_ratio(1.0, 0.1, 1, 1.0, 1.0);
  for (std::size_t n = 2; n < 1000; n *= 2) {
    const double er = error_ratio(1.0, 0.1, n, 1.0, 1.0);
    EXPECT_LT(er, prev);
    prev = er;
  }
  EXPECT_THROW(error_ratio(0.0, 1.0, 1, 1.0, 1.0), DomainError);
}

TEST(IntegralTable, Invariants) {
  const auto t = IntegralTable::orthonormal(4);
  EXPECT_EQ(t[0], 1.0);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(t[j], 0.0);
  EXPECT_THROW(IntegralTable::from_moments({0.9, 0.1}), DomainError);
  EXPECT_THROW(IntegralTable::orthonormal(0), DomainError);
}

TEST(EstimatorProperty, CoverageOfDegreeZeroCi) {
  // f(x) = x, 1000 runs at N = 1000: coverage within 95% +- 3%.
  const BasisSet b = BasisSet::tensor_legendre(1, 0);
  int covered = 0;
  for (std::uint64_t run = 0; run < 1000; ++run) {
    const auto batch = sample_plain(UniformCube{1}, 1000, 1000 + run);
    const MclsEstimate e =
        mcls_estimate([](std::span<const double> x) { return x[0]; }, b, batch, IntegralTable::orthonormal(1));
    covered += (e.ci_low <= 0.5 && 0.5 <= e.ci_high) ? 1 : 0;
  }
  EXPECT_GE(covered, 920);
  EXPECT_LE(covered, 980);
}

TEST(EstimatorProperty, BiasDecaysLikeOneOverN) {
  // f(x) = x^2 with a degree-1 Legendre fit: bias(N) / bias(2N) near 2.
  const BasisSet b = BasisSet::tensor_legendre(1, 1);
  auto mean_error = [&](std::size_t n, std::uint64_t seed0) {
    double s = 0.0;
    const int runs = 10000;
    for (int run = 0; run < runs; ++run) {
      const auto batch = sample_plain(UniformCube{1}, n, seed0 + static_cast<std::uint64_t>(run));
      s += mcls_estimate([](std::span<const double> x) { return x[0] * x[0]; }, b, batch,
                         IntegralTable::orthonormal(2))
               .value -
           1.0 / 3.0;
    }
    return s / runs;
  };
  const double ratio = mean_error(100, 1) / mean_error(200, 50000);
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.5);
}

TEST(McEstimate, MatchesSampleStatistics) {
  const std::vector<double> f{1.0, 3.0, 5.0, 7.0};
  const MclsEstimate e = mc_estimate(f);
  EXPECT_DOUBLE_EQ(e.value, 4.0);
  EXPECT_NEAR(e.sigma_ls, std::sqrt(20.0 / 3.0), 1e-14);
  EXPECT_NEAR(e.ci_width(), 2.0 * 1.96 * std::sqrt(20.0 / 3.0) / 2.0, 1e-14);
}
