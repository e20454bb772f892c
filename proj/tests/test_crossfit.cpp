#include <gtest/gtest.h>

#include <mutex>
#include <set>

#include "bdml/crossfit.hpp"
#include "plr_fixture.hpp"

using namespace bdml;

namespace {

std::vector<std::size_t> fold_sizes(const FoldAssignment& f) {
  std::vector<std::size_t> sizes(f.k, 0);
  for (auto a : f.assignment) ++sizes[a];
  return sizes;
}

FitFunction constant_mean() {
  return [](const Matrix&, const Vector& y, std::span<const std::size_t>, std::size_t) {
    const double m = y.mean();
    return Predictor([m](const Matrix& x) { return Vector::Constant(x.rows(), m); });
  };
}

// Column 0 of x carries the unit index.
ObservationSet indexed_obs(std::size_t n) {
  Matrix x(static_cast<Eigen::Index>(n), 2);
  Vector y(x.rows()), d(x.rows());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = z(rng);
    y[i] = z(rng);
    d[i] = z(rng);
  }
  return ObservationSet(y, d, x);
}

}  // namespace

TEST(MakeFolds, BalancedSizes) {
  EXPECT_EQ(fold_sizes(make_folds(4, 2, 1)), (std::vector<std::size_t>{2, 2}));
  auto s5 = fold_sizes(make_folds(5, 2, 1));
  std::sort(s5.begin(), s5.end());
  EXPECT_EQ(s5, (std::vector<std::size_t>{2, 3}));
  for (std::size_t k : {3u, 7u, 17u}) {
    const auto sizes = fold_sizes(make_folds(17, k, 9));
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_GE(*lo, 1u);
    EXPECT_LE(*hi - *lo, 1u);
  }
}

TEST(MakeFolds, SeedControlsAssignment) {
  EXPECT_EQ(make_folds(500, 2, 42).assignment, make_folds(500, 2, 42).assignment);
  EXPECT_NE(make_folds(500, 2, 42).assignment, make_folds(500, 2, 43).assignment);
}

TEST(MakeFolds, RejectsBadFoldCounts) {
  EXPECT_THROW(make_folds(10, 1, 0), ConfigError);
  EXPECT_THROW(make_folds(3, 4, 0), ConfigError);
}

TEST(MakeFolds, MembersPartitionUnits) {
  const auto f = make_folds(23, 4, 5);
  std::set<std::size_t> seen;
  for (std::size_t k = 0; k < f.k; ++k) {
    for (auto i : f.members(k)) EXPECT_TRUE(seen.insert(i).second);
    EXPECT_EQ(f.members(k).size() + f.complement(k).size(), f.n());
  }
  EXPECT_EQ(seen.size(), 23u);
}

TEST(Crossfit, LeaveOneOutConstantLearner) {
  const auto obs = indexed_obs(9);
  const auto folds = make_folds(9, 9, 2);
  const auto np = crossfit_nuisance(obs, folds, constant_mean(), constant_mean());
  EXPECT_EQ(np.kind, NuisanceKind::PartiallingOut);
  const double sd = obs.d().sum(), sy = obs.y().sum();
  for (Eigen::Index i = 0; i < 9; ++i) {
    EXPECT_NEAR(np.pi_hat[i], (sd - obs.d()[i]) / 8.0, 1e-12);
    EXPECT_NEAR(np.g_hat[i], (sy - obs.y()[i]) / 8.0, 1e-12);
  }
}

TEST(Crossfit, NoUnitPredictedByModelThatSawIt) {
  const auto obs = indexed_obs(40);
  const auto folds = make_folds(40, 2, 8);
  std::mutex mu;
  std::vector<std::set<std::size_t>> seen_train(2);
  auto memorizer = [&](const Matrix& x, const Vector&, std::span<const std::size_t> rows,
                       std::size_t fold) {
    std::set<std::size_t> train;
    for (Eigen::Index i = 0; i < x.rows(); ++i) train.insert(static_cast<std::size_t>(x(i, 0)));
    EXPECT_EQ(train, std::set<std::size_t>(rows.begin(), rows.end()));
    {
      std::lock_guard lock(mu);
      seen_train[fold] = train;
    }
    return Predictor([train](const Matrix& xn) {
      Vector out(xn.rows());
      for (Eigen::Index i = 0; i < xn.rows(); ++i) {
        out[i] = train.count(static_cast<std::size_t>(xn(i, 0))) ? 1.0 : 0.0;
      }
      return out;
    });
  };
  const auto np = crossfit_nuisance(obs, folds, memorizer, memorizer);
  EXPECT_EQ(np.pi_hat.sum(), 0.0);
  EXPECT_EQ(np.g_hat.sum(), 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    for (auto i : folds.members(k)) EXPECT_EQ(seen_train[k].count(i), 0u);
    EXPECT_EQ(seen_train[k].size(), folds.complement(k).size());
  }
}

TEST(Crossfit, KnownNuisancesGiveFullInformationScore) {
  const auto sample = oracle::simulate_plr(60, 1.0, 4);
  auto truth_of = [&](const Vector& col) {
    return [&sample, col](const Matrix&, const Vector&, std::span<const std::size_t>,
                          std::size_t) {
      return Predictor([&sample, col](const Matrix& xn) {
        // Rows of xn are looked up by matching the first covariate.
        Vector out(xn.rows());
        for (Eigen::Index i = 0; i < xn.rows(); ++i) {
          for (Eigen::Index j = 0; j < sample.obs.x().rows(); ++j) {
            if (sample.obs.x()(j, 0) == xn(i, 0)) out[i] = col[j];
          }
        }
        return out;
      });
    };
  };
  const auto folds = make_folds(60, 2, 1);
  const auto np =
      crossfit_nuisance(sample.obs, folds, truth_of(sample.truth.pi_hat), truth_of(sample.truth.g_hat));
  const auto split = build_score_components(sample.obs, np);
  const auto full = build_score_components(sample.obs, sample.truth);
  EXPECT_TRUE(split.a.isApprox(full.a, 1e-14));
  EXPECT_TRUE(split.b.isApprox(full.b, 1e-14));
}

TEST(Crossfit, LearnerFailureNamesFold) {
  const auto obs = indexed_obs(10);
  const auto folds = make_folds(10, 2, 1);
  auto failing = [&](const Matrix&, const Vector&, std::span<const std::size_t>,
                     std::size_t fold) -> Predictor {
    if (fold == 1) throw DataError("boom");
    return [](const Matrix& x) { return Vector::Zero(x.rows()).eval(); };
  };
  try {
    crossfit_nuisance(obs, folds, failing, constant_mean());
    FAIL() << "expected an error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("fold 2"), std::string::npos);
  }
}

TEST(Crossfit, RejectsFoldCountMismatch) {
  const auto obs = indexed_obs(10);
  EXPECT_THROW(crossfit_nuisance(obs, make_folds(11, 2, 1), constant_mean(), constant_mean()),
               ConfigError);
}

TEST(Crossfit, BinaryTreatmentPropensitiesAreClipped) {
  Matrix x(8, 1);
  x << 0, 1, 2, 3, 4, 5, 6, 7;
  Vector d(8), y = Vector::LinSpaced(8, 0, 1);
  d << 1, 1, 1, 1, 1, 1, 1, 1;
  d[0] = 0;
  const ObservationSet obs(y, d, x);
  auto zero = [](const Matrix&, const Vector&, std::span<const std::size_t>, std::size_t) {
    return Predictor([](const Matrix& xn) { return Vector::Zero(xn.rows()).eval(); });
  };
  const auto np = crossfit_nuisance(obs, make_folds(8, 2, 1), zero, zero);
  EXPECT_DOUBLE_EQ(np.pi_hat.minCoeff(), kPropensityClip);
}

TEST(Crossfit, BuiltInLearnersAreDeterministic) {
  const auto sample = oracle::simulate_plr(400, 1.0, 11, 4);
  const auto folds = make_folds(400, 2, 5);
  const auto [spi, sg] = nuisance_specs(sample.obs, LearnerFamily::Lasso, 17);
  const auto a = crossfit_nuisance(sample.obs, folds, spi, sg);
  const auto b = crossfit_nuisance(sample.obs, folds, spi, sg);
  EXPECT_EQ(a.pi_hat, b.pi_hat);
  EXPECT_EQ(a.g_hat, b.g_hat);
  // Out-of-fold lasso propensities track the linear truth.
  const Vector u = a.pi_hat.array() - a.pi_hat.mean();
  const Vector v = sample.truth.pi_hat.array() - sample.truth.pi_hat.mean();
  EXPECT_GT(u.dot(v) / (u.norm() * v.norm()), 0.9);
}
