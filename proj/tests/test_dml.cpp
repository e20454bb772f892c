#include <gtest/gtest.h>

#include <random>

#include "bdml/dml.hpp"
#include "plr_fixture.hpp"

using namespace bdml;

namespace {

ScoreComponents components(std::initializer_list<double> a, std::initializer_list<double> b) {
  ScoreComponents sc;
  sc.a = Eigen::Map<const Vector>(a.begin(), static_cast<Eigen::Index>(a.size()));
  sc.b = Eigen::Map<const Vector>(b.begin(), static_cast<Eigen::Index>(b.size()));
  return sc;
}

}  // namespace

TEST(DmlPoint, ClosedForm) {
  EXPECT_DOUBLE_EQ(dml_point(components({1, 2, 3}, {1, 1, 1})), 2.0);
}

TEST(DmlPoint, ExactFitHasZeroResidualAndVariance) {
  const auto sc = components({1.5, -3.0, 0.75, 6.0}, {0.5, -1.0, 0.25, 2.0});
  const double beta = dml_point(sc);
  EXPECT_DOUBLE_EQ(beta, 3.0);
  EXPECT_LT(evaluate_score(sc, beta).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(dml_variance(sc, beta), 0.0);
}

TEST(DmlPoint, DegenerateDesignThrows) {
  EXPECT_THROW(dml_point(components({1, 2}, {1, -1})), NumericalError);
  EXPECT_THROW(dml_variance(components({1, 2}, {1, -1}), 0.0), NumericalError);
  EXPECT_THROW(dml_variance(components({1}, {1}), 0.0), DataError);
}

TEST(DmlVariance, StandardErrorOfAMean) {
  const Eigen::Index n = 10000;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  ScoreComponents sc;
  sc.a.resize(n);
  for (auto& v : sc.a) v = z(rng);
  sc.b = Vector::Ones(n);
  const auto est = dml_estimate(sc);
  EXPECT_NEAR(est.se * std::sqrt(static_cast<double>(n)), 1.0, 0.1);
  EXPECT_NEAR(est.beta_hat - est.lo, 1.959964 * est.se, 1e-6 * est.se);
  EXPECT_NEAR(est.hi - est.beta_hat, 1.959964 * est.se, 1e-6 * est.se);
}

TEST(DmlEstimate, RecoversEffectWithKnownNuisances) {
  const auto s = oracle::simulate_plr(2000, 1.0, 21);
  const auto sc = build_score_components(s.obs, s.truth);
  const double beta = dml_point(sc);
  EXPECT_NEAR(beta, 1.0, 0.1);
  EXPECT_LE(std::abs(evaluate_score(sc, beta).sum()), 1e-10 * sc.a.cwiseAbs().sum());
}

TEST(DmlEstimate, ScaleEquivariance) {
  const auto s = oracle::simulate_plr(300, 0.7, 5);
  const double c = -3.5;
  NuisancePredictions scaled = s.truth;
  scaled.g_hat *= c;
  const ObservationSet obs2(s.obs.y() * c, s.obs.d(), s.obs.x());
  const auto e1 = dml_estimate(build_score_components(s.obs, s.truth));
  const auto e2 = dml_estimate(build_score_components(obs2, scaled));
  EXPECT_NEAR(e2.beta_hat, c * e1.beta_hat, 1e-12 * std::abs(c * e1.beta_hat));
  EXPECT_NEAR(e2.se, std::abs(c) * e1.se, 1e-12 * e2.se);
}

TEST(DmlEstimate, WaldCoverageNearNominal) {
  const int reps = 1000;
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    const auto s = oracle::simulate_plr(400, 1.0, 1000 + static_cast<std::uint64_t>(r), 2);
    const auto e = dml_estimate(build_score_components(s.obs, s.truth));
    if (e.lo <= 1.0 && 1.0 <= e.hi) ++covered;
  }
  EXPECT_NEAR(covered / static_cast<double>(reps), 0.95, 0.02);
}
