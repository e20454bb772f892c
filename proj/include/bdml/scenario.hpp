#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bdml/error.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml {

enum class ScenarioKind { BinaryExposure, ContinuousExposure, SplitDemo };

inline std::string scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::BinaryExposure: return "binary";
    case ScenarioKind::ContinuousExposure: return "continuous";
    case ScenarioKind::SplitDemo: return "split-demo";
  }
  return "?";
}

inline ScenarioKind parse_scenario(const std::string& s) {
  if (s == "binary") return ScenarioKind::BinaryExposure;
  if (s == "continuous") return ScenarioKind::ContinuousExposure;
  if (s == "split-demo" || s == "split_demo" || s == "split") return ScenarioKind::SplitDemo;
  throw ConfigError("unknown scenario '" + s + "' (expected binary, continuous or split-demo)");
}

/// Sparse linear index: pairs of (0-based covariate column, coefficient).
using LinearTerms = std::vector<std::pair<int, double>>;

/// Data-generating design. X rows are N(0, Sigma) with unit diagonal and
/// constant off-diagonal `rho`; the treatment index is either the logit of
/// a Bernoulli draw (binary) or the mean of a unit-variance Gaussian; the
/// outcome is beta D + outcome index + N(0,1).
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::ContinuousExposure;
  std::size_t n = 40;
  std::size_t p = 40;
  double rho = 0.05;
  double beta_true = 1.0;
  LinearTerms treatment;
  LinearTerms outcome;
  std::uint64_t seed = 0;

  static LinearTerms default_outcome() { return {{0, 0.5}, {2, 1.0}, {3, -0.1}, {6, -0.2}}; }

  static ScenarioSpec binary_exposure(std::size_t n = 200, std::size_t p = 500) {
    return {ScenarioKind::BinaryExposure, n, p, 0.3, 1.0,
            {{0, 0.3}, {1, 0.2}, {4, -0.4}}, default_outcome(), 0};
  }

  static ScenarioSpec continuous_exposure(std::size_t n = 40, std::size_t p = 40) {
    return {ScenarioKind::ContinuousExposure, n, p, 0.05, 1.0,
            {{0, 0.45}, {1, 0.9}, {4, -0.4}}, default_outcome(), 0};
  }

  /// Continuous design with independent covariates and a negative effect,
  /// used to contrast full-sample and split-sample nuisance contamination.
  static ScenarioSpec split_demo(std::size_t n = 500, std::size_t p = 10) {
    return {ScenarioKind::SplitDemo, n, p, 0.0, -0.5,
            {{0, 0.45}, {1, 0.9}, {4, -0.4}}, default_outcome(), 0};
  }

  static ScenarioSpec make(ScenarioKind kind) {
    switch (kind) {
      case ScenarioKind::BinaryExposure: return binary_exposure();
      case ScenarioKind::ContinuousExposure: return continuous_exposure();
      case ScenarioKind::SplitDemo: return split_demo();
    }
    throw ConfigError("unknown scenario kind");
  }

  bool binary() const noexcept { return kind == ScenarioKind::BinaryExposure; }

  void validate() const {
    if (n < ObservationSet::kMinUnits) throw ConfigError("scenario n must be at least " + std::to_string(ObservationSet::kMinUnits));
    if (p < 1) throw ConfigError("scenario p must be at least 1");
    if (!std::isfinite(beta_true)) throw ConfigError("beta_true must be finite");
    for (const auto* terms : {&treatment, &outcome}) {
      for (const auto& [j, c] : *terms) {
        if (j < 0 || static_cast<std::size_t>(j) >= p) {
          throw ConfigError("scenario coefficient refers to column " + std::to_string(j + 1) +
                            " but p = " + std::to_string(p));
        }
        if (!std::isfinite(c)) throw ConfigError("scenario coefficients must be finite");
      }
    }
    const double lower = p > 1 ? -1.0 / static_cast<double>(p - 1) : -1.0;
    if (!(rho > lower && rho < 1.0)) {
      throw ConfigError("equicorrelation rho=" + std::to_string(rho) +
                        " is not positive definite for p=" + std::to_string(p));
    }
  }
};

/// Simulated sample together with the true nuisance functions at each row.
struct SimulatedData {
  ObservationSet obs;
  Vector pi_true;  // E[D|X]
  Vector mu_true;  // outcome index, E[Y|X] - beta E[D|X]
  double beta = 0.0;
};

namespace detail {

/// Lower Cholesky factor of the equicorrelation matrix, cached per (p, rho).
inline std::shared_ptr<const Matrix> equicorrelation_factor(std::size_t p, double rho) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, double>, std::shared_ptr<const Matrix>> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_pair(p, rho);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const auto m = static_cast<Eigen::Index>(p);
  Matrix sigma = Matrix::Constant(m, m, rho);
  sigma.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("equicorrelation matrix (p=" + std::to_string(p) +
                      ", rho=" + std::to_string(rho) + ") is not positive definite");
  }
  auto factor = std::make_shared<const Matrix>(llt.matrixL());
  cache.emplace(key, factor);
  return factor;
}

inline double linear_index(const LinearTerms& terms, const Matrix& x, Eigen::Index i) {
  double v = 0.0;
  for (const auto& [j, c] : terms) v += c * x(i, j);
  return v;
}

}  // namespace detail

inline SimulatedData simulate_with_truth(const ScenarioSpec& spec,
                                         std::optional<double> beta_override,
                                         std::uint64_t seed) {
  spec.validate();
  const double beta = beta_override.value_or(spec.beta_true);
  if (!std::isfinite(beta)) throw ConfigError("treatment effect must be finite");
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.p);
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;

  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = z(rng);
  }
  if (spec.rho != 0.0) {
    const auto factor = detail::equicorrelation_factor(spec.p, spec.rho);
    x = x * factor->transpose();
  }

  Vector d(n), y(n), pi(n), mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double idx = detail::linear_index(spec.treatment, x, i);
    if (spec.binary()) {
      pi[i] = 1.0 / (1.0 + std::exp(-idx));
      d[i] = u(rng) < pi[i] ? 1.0 : 0.0;
    } else {
      pi[i] = idx;
      d[i] = idx + z(rng);
    }
    mu[i] = detail::linear_index(spec.outcome, x, i);
    y[i] = beta * d[i] + mu[i] + z(rng);
  }
  return {ObservationSet(std::move(y), std::move(d), std::move(x)), std::move(pi), std::move(mu),
          beta};
}

inline ObservationSet simulate(const ScenarioSpec& spec, std::optional<double> beta_override,
                               std::uint64_t seed) {
  return simulate_with_truth(spec, beta_override, seed).obs;
}

}  // namespace bdml
