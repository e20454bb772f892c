#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bdml/error.hpp"
#include "bdml/learner.hpp"
#include "bdml/parallel.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml {

/// Balanced partition of 0..n-1 into k folds. Fold labels are 0-based.
struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return assignment.size(); }

  std::vector<std::size_t> members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> complement(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] != fold) out.push_back(i);
    }
    return out;
  }
};

inline FoldAssignment make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw ConfigError("fold count must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  f.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.assignment[i] = i % k;
  Rng rng(seed);
  std::shuffle(f.assignment.begin(), f.assignment.end(), rng);
  return f;
}

/// Trained predictor: maps a feature matrix to predictions.
using Predictor = std::function<Vector(const Matrix&)>;
/// Fits on (x_train, target_train). `train_rows` are the original unit
/// indices of the training rows and `fold` is the held-out fold.
using FitFunction = std::function<Predictor(const Matrix&, const Vector&,
                                            std::span<const std::size_t> train_rows,
                                            std::size_t fold)>;

/// Out-of-fold predictions: unit i is predicted by models that never saw
/// i's fold. The result is tagged PartiallingOut.
inline NuisancePredictions crossfit_nuisance(const ObservationSet& obs,
                                             const FoldAssignment& folds,
                                             const FitFunction& fit_pi,
                                             const FitFunction& fit_g) {
  if (folds.n() != obs.n()) {
    throw ConfigError("fold assignment covers " + std::to_string(folds.n()) +
                      " units, data has " + std::to_string(obs.n()));
  }
  NuisancePredictions out;
  out.kind = NuisanceKind::PartiallingOut;
  out.pi_hat = Vector::Zero(static_cast<Eigen::Index>(obs.n()));
  out.g_hat = Vector::Zero(static_cast<Eigen::Index>(obs.n()));
  parallel_for(folds.k, [&](std::size_t k) {
    const auto test = folds.members(k);
    const auto train = folds.complement(k);
    try {
      const Matrix x_train = obs.x()(train, Eigen::all);
      const Matrix x_test = obs.x()(test, Eigen::all);
      const Vector pi_test = fit_pi(x_train, obs.d()(train), train, k)(x_test);
      const Vector g_test = fit_g(x_train, obs.y()(train), train, k)(x_test);
      for (std::size_t j = 0; j < test.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(test[j]);
        out.pi_hat[i] = pi_test[static_cast<Eigen::Index>(j)];
        out.g_hat[i] = g_test[static_cast<Eigen::Index>(j)];
      }
    } catch (const Error& e) {
      throw NumericalError("cross-fitting fold " + std::to_string(k + 1) + ": " + e.what());
    }
  });
  if (obs.binary_treatment()) out.clip_propensity();
  return out;
}

/// Wraps a built-in learner; each fold gets its own seed derived from the
/// spec seed.
inline FitFunction learner_fit_function(const LearnerSpec& spec) {
  return [spec](const Matrix& x, const Vector& y, std::span<const std::size_t>,
                std::size_t fold) {
    LearnerSpec s = spec;
    s.seed = derive_seed(spec.seed, fold);
    auto model = std::make_shared<const FittedLearner>(fit(s, x, y));
    return Predictor([model](const Matrix& xn) { return model->predict(xn); });
  };
}

inline NuisancePredictions crossfit_nuisance(const ObservationSet& obs,
                                             const FoldAssignment& folds,
                                             const LearnerSpec& spec_pi,
                                             const LearnerSpec& spec_g) {
  return crossfit_nuisance(obs, folds, learner_fit_function(spec_pi),
                           learner_fit_function(spec_g));
}

/// Learner specs for both nuisances of one family: the propensity learner
/// switches to BinaryProbability for a 0/1 treatment.
inline std::pair<LearnerSpec, LearnerSpec> nuisance_specs(const ObservationSet& obs,
                                                          LearnerFamily family,
                                                          std::uint64_t seed) {
  LearnerSpec pi;
  pi.family = family;
  pi.task = obs.binary_treatment() ? LearnerTask::BinaryProbability : LearnerTask::Regression;
  pi.seed = derive_seed(seed, 0, 11);
  LearnerSpec g;
  g.family = family;
  g.task = LearnerTask::Regression;
  g.seed = derive_seed(seed, 0, 12);
  return {pi, g};
}

}  // namespace bdml
