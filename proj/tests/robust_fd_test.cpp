#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "learnsketch/datagen.hpp"
#include "learnsketch/frequent_directions.hpp"
#include "learnsketch/oracles.hpp"
#include "test_support.hpp"

namespace ls = learnsketch;
using testing_support::random_matrix;

namespace {

std::vector<double> unit_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> x(d);
  for (double& v : x) v = normal(rng);
  const double n = std::sqrt(ls::norm_sq(x));
  for (double& v : x) v /= n;
  return x;
}

double exact_query(const ls::DenseMatrix& a, std::span<const double> x) { return ls::norm_sq(ls::multiply(a, x)); }

}  // namespace

TEST(ResidualEstimate, ZeroForLowRankInput) {
  const auto a = ls::multiply(random_matrix(100, 3, 1), random_matrix(3, 12, 2));
  EXPECT_LE(ls::residual_estimate(a, 3), 1e-9 * a.frobenius_norm_sq());
  EXPECT_LE(ls::residual_estimate<ls::ExactResidualEstimator>(a, 3), 1e-9 * a.frobenius_norm_sq());
}

TEST(ResidualEstimate, DiagonalSpectrumEnvelope) {
  // Rows are scaled basis vectors repeated, so σᵢ² is known in closed form.
  const std::size_t d = 10;
  ls::DenseMatrix a(0, d);
  std::vector<double> sigma_sq(d);
  for (std::size_t i = 0; i < d; ++i) {
    sigma_sq[i] = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> row(d, 0.0);
      row[i] = 1.0 / static_cast<double>(i + 1) + 0.1 * rep;
      sigma_sq[i] += row[i] * row[i];
      a.append_row(row);
    }
  }
  std::sort(sigma_sq.rbegin(), sigma_sq.rend());
  for (std::size_t k = 0; k < 5; ++k) {
    double tail = 0.0;
    for (std::size_t i = k; i < d; ++i) tail += sigma_sq[i];
    const double est = ls::residual_estimate(a, k);
    EXPECT_GE(est, tail * (1 - 1e-9)) << k;
    EXPECT_LE(est, 2.0 * tail * (1 + 1e-9)) << k;
  }
}

TEST(ResidualEstimate, FactorTwoEnvelopeOnRandomMatrices) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto a = random_matrix(200, 24, 50 + seed);
    for (std::size_t c = 0; c < 24; ++c)
      for (std::size_t r = 0; r < 200; ++r) a(r, c) *= std::pow(0.8, static_cast<double>(c));
    const auto tail = testing_support::reference_tails(a);
    for (std::size_t k : {1u, 4u, 8u}) {
      const double est = ls::residual_estimate(a, k);
      EXPECT_GE(est, tail[k] * (1 - 1e-9)) << seed << " k=" << k;
      EXPECT_LE(est, 2.0 * tail[k]) << seed << " k=" << k;
      EXPECT_NEAR(ls::residual_estimate<ls::ExactResidualEstimator>(a, k), tail[k], 1e-9 * tail[0]);
    }
  }
}

TEST(RobustLearnedFd, PerfectOracleAnswersTopDirectionExactly) {
  const auto inst = ls::zipf_matrix(32, 300, 3);
  const auto oracle = ls::perfect_direction_oracle(inst.a, 4);
  ls::RobustLearnedFrequentDirections<> s(16, oracle.p);
  s.update_rows(inst.a);
  const auto ref = testing_support::reference_singular_values(inst.a);
  std::vector<double> v1(oracle.p.rows());
  for (std::size_t i = 0; i < v1.size(); ++i) v1[i] = oracle.p(i, 0);
  EXPECT_NEAR(s.query(v1), ref[0] * ref[0], 1e-8 * inst.a.frobenius_norm_sq());
  EXPECT_TRUE(s.result().prefers_learned(v1));
}

TEST(RobustLearnedFd, TwoDimensionalCounterexampleFallsBack) {
  const ls::DenseMatrix a{{1.0, 1.0}};
  const ls::DenseMatrix p{{1.0}, {0.0}};
  ls::RobustLearnedFrequentDirections<> s(4, p, 1);
  s.update_rows(a);
  const std::vector<double> x{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
  const auto r = s.result();
  // The stacked learned sketch is the identity, so it reports 1 where ‖Ax‖² = 0.
  EXPECT_NEAR(ls::fd_query(r.learned, x), 1.0, 1e-12);
  EXPECT_NEAR(exact_query(a, x), 0.0, 1e-15);
  EXPECT_FALSE(r.prefers_learned(x));
  const double residual = testing_support::reference_tails(a)[1];
  EXPECT_LE(std::abs(s.query(x) - exact_query(a, x)), 6.0 * residual / 3.0 + 1e-12);
  EXPECT_NEAR(s.query(x), 0.0, 1e-12);
}

TEST(RobustLearnedFd, AdversarialOracleStaysWithinResidualBound) {
  const auto inst = ls::zipf_matrix(48, 400, 4);
  const std::size_t m = 20;
  const auto oracle = ls::adversarial_direction_oracle(inst.a, 5);
  ls::RobustLearnedFrequentDirections<> s(m, oracle.p);
  s.update_rows(inst.a);
  const std::size_t k = s.residual_rank();
  const double bound = 6.0 * testing_support::reference_tails(inst.a)[k] / static_cast<double>(m - k);
  const auto r = s.result();
  std::mt19937_64 rng(5);
  for (int q = 0; q < 1000; ++q) {
    const auto x = unit_vector(48, rng);
    ASSERT_LE(std::abs(r.query(x) - exact_query(inst.a, x)), bound + 1e-8 * inst.a.frobenius_norm_sq()) << q;
  }
}

TEST(RobustLearnedFd, ErrorNeverExceedsLearnedBranchOrResidualBound) {
  std::mt19937_64 rng(6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = ls::zipf_matrix(24, 200, 100 + seed);
    const std::size_t m = 12;
    const auto oracle = seed % 2 == 0 ? ls::adversarial_direction_oracle(inst.a, 3)
                                      : ls::noisy_direction_oracle(ls::perfect_direction_oracle(inst.a, 3), 0.5, seed);
    ls::RobustLearnedFrequentDirections<> s(m, oracle.p);
    s.update_rows(inst.a);
    const std::size_t k = s.residual_rank();
    const double res_bound = 6.0 * testing_support::reference_tails(inst.a)[k] / static_cast<double>(m - k);
    const double tol = 1e-8 * inst.a.frobenius_norm_sq();
    const auto r = s.result();
    for (int q = 0; q < 100; ++q) {
      const auto x = unit_vector(24, rng);
      const double exact = exact_query(inst.a, x);
      const double learned_err = std::abs(exact - ls::fd_query(r.learned, x));
      ASSERT_LE(std::abs(exact - r.query(x)), std::min(learned_err, res_bound) + tol) << seed << "/" << q;
    }
  }
}

TEST(RobustLearnedFd, ExactResidualVariantAndValidation) {
  const auto a = random_matrix(100, 10, 7);
  const auto p = ls::perfect_direction_oracle(a, 2).p;
  ls::RobustLearnedFrequentDirections<ls::ExactResidualEstimator> s(8, p);
  s.update_rows(a);
  EXPECT_NEAR(s.result().alpha * 4.0, testing_support::reference_tails(a)[4], 1e-9 * a.frobenius_norm_sq());
  EXPECT_THROW(ls::RobustLearnedFrequentDirections<>(8, p, 8), std::invalid_argument);
  const std::vector<double> not_unit(10, 1.0);
  EXPECT_THROW(static_cast<void>(s.query(not_unit)), std::invalid_argument);
}
