#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bdml/dml.hpp"
#include "bdml/error.hpp"
#include "bdml/gel.hpp"
#include "bdml/learner.hpp"
#include "bdml/parallel.hpp"
#include "bdml/pipeline.hpp"
#include "bdml/random.hpp"
#include "bdml/scenario.hpp"

namespace bdml {

/// Point estimate with a 95% interval (credible or Wald).
struct IntervalEstimate {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct MetricsRow {
  std::string method;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;  // percent
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double runtime_seconds = 0.0;
};

inline MetricsRow compute_metrics(const std::string& method,
                                  const std::vector<IntervalEstimate>& estimates,
                                  double beta_true) {
  if (estimates.empty()) throw DataError("metrics for '" + method + "' need at least one replicate");
  MetricsRow row;
  row.method = method;
  row.replicates = estimates.size();
  double sum = 0.0, sq = 0.0;
  std::size_t covered = 0;
  for (const auto& e : estimates) {
    const double err = e.estimate - beta_true;
    sum += err;
    sq += err * err;
    if (e.lo <= beta_true && beta_true <= e.hi) ++covered;
  }
  const double r = static_cast<double>(estimates.size());
  row.bias = sum / r;
  row.rmse = std::sqrt(sq / r);
  row.coverage = 100.0 * static_cast<double>(covered) / r;
  return row;
}

/// Share of failed replicates tolerated before a Monte-Carlo run is aborted.
inline constexpr double kMaxFailureShare = 0.05;

inline void check_failure_share(std::size_t failures, std::size_t total, const std::string& what) {
  if (static_cast<double>(failures) > kMaxFailureShare * static_cast<double>(total)) {
    throw NumericalError(what + ": " + std::to_string(failures) + " of " + std::to_string(total) +
                         " replicates failed");
  }
}

/// Runs `replicate(r, seed_r)` for r = 0..R-1, where seed_r depends only on
/// (seed, r). Each call returns one estimate per label. Replicates that throw
/// are dropped from every row and counted as failures.
inline std::vector<MetricsRow> run_replicates(
    const std::vector<std::string>& labels, std::size_t replicates, std::uint64_t seed,
    double beta_true,
    const std::function<std::vector<IntervalEstimate>(std::size_t, std::uint64_t)>& replicate) {
  if (replicates < 2) throw ConfigError("benchmarks need at least 2 replicates");
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::optional<std::vector<IntervalEstimate>>> results(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    try {
      auto est = replicate(r, derive_seed(seed, r));
      if (est.size() != labels.size()) {
        throw ConfigError("replicate returned " + std::to_string(est.size()) +
                          " estimates for " + std::to_string(labels.size()) + " methods");
      }
      results[r] = std::move(est);
    } catch (const NumericalError&) {
    } catch (const DataError&) {
    }
  });
  std::size_t failures = 0;
  for (const auto& r : results) failures += r ? 0 : 1;
  check_failure_share(failures, replicates, "benchmark");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<MetricsRow> rows;
  for (std::size_t m = 0; m < labels.size(); ++m) {
    std::vector<IntervalEstimate> col;
    for (const auto& r : results) {
      if (r) col.push_back((*r)[m]);
    }
    MetricsRow row = compute_metrics(labels[m], col, beta_true);
    row.failures = failures;
    row.runtime_seconds = elapsed;
    rows.push_back(row);
  }
  return rows;
}

/// One benchmark row: DML (no divergence) or a GEL posterior, with a learner
/// family used for both nuisances.
struct MethodSpec {
  std::optional<DivergenceSpec> divergence;
  LearnerFamily learner = LearnerFamily::Lasso;

  static MethodSpec dml(LearnerFamily f) { return {std::nullopt, f}; }
  static MethodSpec bayes(DivergenceSpec d, LearnerFamily f) { return {d, f}; }

  std::string label() const {
    const std::string head = divergence ? divergence->name() : std::string("DML");
    return head + " (" + family_name(learner) + ")";
  }
};

/// Simulates R data sets from `scenario`, fits each method and reports bias,
/// RMSE and coverage against the scenario's true effect. Nuisances are
/// cross-fitted once per (replicate, learner) and shared across methods.
inline std::vector<MetricsRow> run_benchmark(const ScenarioSpec& scenario,
                                             const std::vector<MethodSpec>& methods,
                                             std::size_t replicates, std::uint64_t seed,
                                             const PipelineSettings& cfg = {}) {
  scenario.validate();
  if (methods.empty()) throw ConfigError("benchmark needs at least one method");
  std::vector<std::string> labels;
  std::vector<LearnerFamily> families;
  for (const auto& m : methods) {
    labels.push_back(m.label());
    if (std::find(families.begin(), families.end(), m.learner) == families.end()) {
      families.push_back(m.learner);
    }
  }
  return run_replicates(
      labels, replicates, seed, scenario.beta_true,
      [&](std::size_t, std::uint64_t rs) {
        const ObservationSet obs = simulate(scenario, std::nullopt, derive_seed(rs, 0));
        std::vector<ScoreComponents> scores;
        for (std::size_t f = 0; f < families.size(); ++f) {
          scores.push_back(crossfit_score(obs, families[f], cfg,
                                          derive_seed(rs, 1, static_cast<std::uint64_t>(families[f]))));
        }
        std::vector<IntervalEstimate> out;
        for (std::size_t m = 0; m < methods.size(); ++m) {
          const auto f = static_cast<std::size_t>(
              std::find(families.begin(), families.end(), methods[m].learner) - families.begin());
          const ScoreComponents& sc = scores[f];
          if (methods[m].divergence) {
            const auto post = sample_posterior(sc, *methods[m].divergence, cfg, derive_seed(rs, 2, m));
            out.push_back({post.mean, post.lo, post.hi});
          } else {
            const auto e = dml_estimate(sc);
            out.push_back({e.beta_hat, e.lo, e.hi});
          }
        }
        return out;
      });
}

}  // namespace bdml
