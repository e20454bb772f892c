#include <gtest/gtest.h>

#include <random>

#include "bdml/score.hpp"

using namespace bdml;

namespace {

ObservationSet small_obs(Vector y, Vector d) {
  Matrix x = Matrix::Zero(y.size(), 1);
  return ObservationSet(std::move(y), std::move(d), std::move(x));
}

}  // namespace

TEST(ObservationSet, RejectsMismatchedLengths) {
  EXPECT_THROW(ObservationSet(Vector::Zero(5), Vector::Zero(4), Matrix::Zero(5, 2)),
               DataError);
  EXPECT_THROW(ObservationSet(Vector::Zero(5), Vector::Zero(5), Matrix::Zero(6, 2)),
               DataError);
}

TEST(ObservationSet, RejectsNonFiniteAndTinySamples) {
  Vector y = Vector::Zero(5);
  y[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ObservationSet(y, Vector::Zero(5), Matrix::Zero(5, 1)), DataError);
  Matrix x = Matrix::Zero(5, 2);
  x(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ObservationSet(Vector::Zero(5), Vector::Zero(5), x), DataError);
  EXPECT_THROW(ObservationSet(Vector::Zero(3), Vector::Zero(3), Matrix::Zero(3, 1)),
               DataError);
}

TEST(ObservationSet, DetectsBinaryTreatment) {
  Vector d(4);
  d << 0, 1, 1, 0;
  EXPECT_TRUE(small_obs(Vector::Zero(4), d).binary_treatment());
  d[2] = 0.5;
  EXPECT_FALSE(small_obs(Vector::Zero(4), d).binary_treatment());
}

TEST(BuildScore, DirectMuWorkedRow) {
  Vector y(4), d(4);
  y << 3, 0, 0, 0;
  d << 2, 0.5, 0.5, 0.5;
  NuisancePredictions nuis{Vector::Constant(4, 1.5), Vector::Constant(4, 1.0),
                           NuisanceKind::DirectMu};
  nuis.pi_hat[1] = 0.5;
  auto sc = build_score_components(small_obs(y, d), nuis);
  EXPECT_DOUBLE_EQ(sc.a[0], 1.0);
  EXPECT_DOUBLE_EQ(sc.b[0], 1.0);
  EXPECT_DOUBLE_EQ(evaluate_score(sc, 1.0)[0], 0.0);
  // d equal to pi_hat annihilates the row.
  EXPECT_EQ(sc.a[1], 0.0);
  EXPECT_EQ(sc.b[1], 0.0);
}

TEST(BuildScore, LengthMismatchIsStructuredError) {
  NuisancePredictions nuis{Vector::Zero(3), Vector::Zero(4), NuisanceKind::PartiallingOut};
  EXPECT_THROW(build_score_components(small_obs(Vector::Zero(4), Vector::Zero(4)), nuis),
               DataError);
}

TEST(BuildScore, MatchesUnfactoredProductForm) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  const int n = 20;
  Vector y(n), d(n), pi(n), g(n);
  for (int i = 0; i < n; ++i) {
    y[i] = N(rng);
    d[i] = N(rng);
    pi[i] = N(rng);
    g[i] = N(rng);
  }
  auto obs = small_obs(y, d);
  for (auto kind : {NuisanceKind::PartiallingOut, NuisanceKind::DirectMu}) {
    auto sc = build_score_components(obs, {pi, g, kind});
    double worst = 0.0;
    for (int r = 0; r < 100; ++r) {
      const double beta = 10.0 * N(rng);
      const Vector fast = evaluate_score(sc, beta);
      for (int i = 0; i < n; ++i) {
        const double resid = d[i] - pi[i];
        const double direct = kind == NuisanceKind::PartiallingOut
                                  ? resid * ((y[i] - g[i]) - beta * resid)
                                  : resid * (y[i] - beta * d[i] - g[i]);
        worst = std::max(worst, std::abs(direct - fast[i]) / (1.0 + std::abs(direct)));
      }
    }
    EXPECT_LT(worst, 1e-13);
  }
}

TEST(BuildScore, PartiallingOutAndDirectMuAgreeAtTruth) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N;
  const int n = 50;
  const double beta = 1.7;
  Vector y(n), d(n), pi(n), mu(n);
  for (int i = 0; i < n; ++i) {
    pi[i] = N(rng);
    mu[i] = N(rng);
    d[i] = pi[i] + N(rng);
    y[i] = mu[i] + beta * d[i] + N(rng);
  }
  auto obs = small_obs(y, d);
  const Vector ell = mu + beta * pi;
  auto partial = build_score_components(obs, {pi, ell, NuisanceKind::PartiallingOut});
  auto direct = build_score_components(obs, {pi, mu, NuisanceKind::DirectMu});
  EXPECT_LT((evaluate_score(partial, beta) - evaluate_score(direct, beta)).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_GE(partial.b.minCoeff(), 0.0);
}

TEST(BuildScore, BinaryPropensityIsClipped) {
  Vector d(4);
  d << 1, 0, 1, 0;
  NuisancePredictions nuis{Vector::Ones(4), Vector::Zero(4), NuisanceKind::PartiallingOut};
  auto sc = build_score_components(small_obs(Vector::Ones(4), d), nuis);
  EXPECT_NEAR(sc.b[0], kPropensityClip * kPropensityClip, 1e-20);
  EXPECT_NEAR(sc.b[1], 1.0, 1e-5);
}

TEST(EvaluateScore, Arithmetic) {
  ScoreComponents sc{Vector(2), Vector(2)};
  sc.a << 1, 2;
  sc.b << 1, 1;
  Vector got = evaluate_score(sc, 1.0);
  EXPECT_EQ(got[0], 0.0);
  EXPECT_EQ(got[1], 1.0);
  EXPECT_EQ(evaluate_score(sc, 0.0), sc.a);
  EXPECT_THROW(evaluate_score(sc, std::nan("")), NumericalError);

  ScoreComponents sc3{Vector(3), Vector::Constant(3, 2.0)};
  sc3.a << 1, 2, 3;
  const double root = sc3.a.mean() / sc3.b.mean();
  EXPECT_DOUBLE_EQ(root, 1.0);
  Vector psi = evaluate_score(sc3, root);
  EXPECT_EQ(psi[0], -1.0);
  EXPECT_EQ(psi[1], 0.0);
  EXPECT_EQ(psi[2], 1.0);
}

TEST(EvaluateScore, LinearInBeta) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> small(-8, 8);
  ScoreComponents sc{Vector(30), Vector(30)};
  for (int i = 0; i < 30; ++i) {
    sc.a[i] = small(rng);
    sc.b[i] = small(rng);
  }
  // Dyadic values keep every product exact.
  for (double lam : {0.0, 0.25, 0.5, 1.0}) {
    const double b1 = 3.0, b2 = -5.0;
    Vector lhs = evaluate_score(sc, lam * b1 + (1 - lam) * b2);
    Vector rhs = lam * evaluate_score(sc, b1) + (1 - lam) * evaluate_score(sc, b2);
    EXPECT_EQ(lhs, rhs);
  }
}

TEST(Disproportionality, RatioDefinition) {
  EXPECT_DOUBLE_EQ(disproportionality_index(0.03, 0.03), 1.0);
  EXPECT_DOUBLE_EQ(disproportionality_index(0.06, 0.03), 2.0);
  EXPECT_THROW(disproportionality_index(0.03, 0.0), DataError);
  EXPECT_THROW(disproportionality_index(0.03, -1.0), DataError);
  // Published borough envelope.
  EXPECT_DOUBLE_EQ(disproportionality_index(1.66 * 0.02, 0.02), 1.66);
  EXPECT_NEAR(disproportionality_index(12.58 * 0.02, 0.02), 12.58, 1e-12);
}
