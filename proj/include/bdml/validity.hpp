#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bdml/benchmark.hpp"
#include "bdml/crossfit.hpp"
#include "bdml/dml.hpp"
#include "bdml/error.hpp"
#include "bdml/gel.hpp"
#include "bdml/mcmc.hpp"
#include "bdml/parallel.hpp"
#include "bdml/pipeline.hpp"
#include "bdml/random.hpp"
#include "bdml/scenario.hpp"

namespace bdml {

/// Posterior CDF at `beta_true` estimated from the draws, with ties counted
/// half.
inline double h_statistic(const std::vector<double>& chain, double beta_true) {
  if (chain.empty()) throw DataError("h_statistic: empty chain");
  double below = 0.0;
  for (double b : chain) {
    if (b < beta_true) {
      below += 1.0;
    } else if (b == beta_true) {
      below += 0.5;
    }
  }
  return below / static_cast<double>(chain.size());
}

/// P(K > x) for the limiting Kolmogorov distribution.
inline double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  double p;
  if (x < 1.0) {
    // Jacobi theta form of the CDF converges fast for small x.
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k < 100; k += 2) {
      const double term = std::exp(c * k * k);
      cdf += term;
      if (term < 1e-16) break;
    }
    p = 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * cdf;
  } else {
    p = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double term = 2.0 * std::exp(-2.0 * k * k * x * x);
      p += (k % 2 == 1) ? term : -term;
      if (term < 1e-10) break;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// asymptotic p-value.
inline KsResult ks_test(std::vector<double> values, const std::function<double(double)>& cdf) {
  if (values.empty()) throw DataError("ks_test: no values");
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return {d, kolmogorov_survival(std::sqrt(m) * d)};
}

inline KsResult ks_uniform_test(const std::vector<double>& values) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("ks_uniform_test: value " + std::to_string(v) + " outside [0,1]");
    }
  }
  return ks_test(values, [](double v) { return v; });
}

inline double standard_normal_cdf(double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [lo, hi]; values outside are clamped into the end
/// bins.
inline std::vector<HistogramBin> histogram(const std::vector<double>& values, std::size_t bins,
                                           double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("histogram needs bins >= 1 and hi > lo");
  std::vector<HistogramBin> out(bins);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = lo + w * static_cast<double>(b);
    out[b].right = b + 1 == bins ? hi : lo + w * static_cast<double>(b + 1);
  }
  for (double v : values) {
    const double pos = std::floor((v - lo) / w);
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++out[b].count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full-sample versus split-sample contamination

/// Score components for the contaminated-nuisance construction: exact
/// propensity, outcome index mu + c (Y - mu). In the full arm the residual is
/// the unit's own; in the split arm each unit borrows the residual of a
/// partner in the other fold, so its nuisance error is independent of its
/// own noise.
inline ScoreComponents contaminated_components(const SimulatedData& sim, double contamination,
                                               const std::optional<FoldAssignment>& split) {
  const Vector resid = sim.obs.y() - sim.mu_true;
  Vector borrowed = resid;
  if (split) {
    if (split->k != 2) throw ConfigError("split contamination needs exactly two folds");
    const auto f0 = split->members(0);
    const auto f1 = split->members(1);
    for (std::size_t j = 0; j < f0.size(); ++j) {
      borrowed[static_cast<Eigen::Index>(f0[j])] = resid[static_cast<Eigen::Index>(f1[j % f1.size()])];
    }
    for (std::size_t j = 0; j < f1.size(); ++j) {
      borrowed[static_cast<Eigen::Index>(f1[j])] = resid[static_cast<Eigen::Index>(f0[j % f0.size()])];
    }
  }
  NuisancePredictions np;
  np.kind = NuisanceKind::DirectMu;
  np.pi_hat = sim.pi_true;
  np.g_hat = sim.mu_true + contamination * borrowed;
  return build_score_components(sim.obs, np);
}

struct SplitDemoSettings {
  std::size_t replicates = 1000;
  ScenarioSpec scenario = ScenarioSpec::split_demo();
  /// Contamination exponent: mu-hat error scale is n^(-exponent); a
  /// negative value switches contamination off.
  double exponent = 1.0 / 3.0;
  std::vector<DivergenceSpec> divergences{DivergenceSpec::el(), DivergenceSpec::etel(),
                                          DivergenceSpec::hd()};
  PipelineSettings pipeline;
  std::uint64_t seed = 0;
};

struct SplitDemoArm {
  std::string method;
  std::vector<double> standardized_full;
  std::vector<double> standardized_split;
  double mean_full = 0.0;
  double mean_split = 0.0;
};

struct SplitDemoReport {
  std::vector<SplitDemoArm> methods;  // DML first, then one per divergence
  std::size_t replicates = 0;
  std::size_t failures = 0;
};

/// Standardized errors (estimate - beta) / scale for DML (Wald SE) and each
/// divergence (posterior SD), on the full sample and under two-fold
/// splitting.
inline SplitDemoReport run_split_demo(const SplitDemoSettings& cfg) {
  cfg.scenario.validate();
  if (cfg.replicates < 2) throw ConfigError("split demo needs at least 2 replicates");
  const std::size_t methods = 1 + cfg.divergences.size();
  const double c = cfg.exponent < 0.0
                       ? 0.0
                       : std::pow(static_cast<double>(cfg.scenario.n), -cfg.exponent);
  // per replicate: [method][arm]
  std::vector<std::optional<std::vector<std::array<double, 2>>>> results(cfg.replicates);
  parallel_for(cfg.replicates, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(cfg.seed, r);
    try {
      const SimulatedData sim = simulate_with_truth(cfg.scenario, std::nullopt, derive_seed(rs, 0));
      const FoldAssignment folds = make_folds(cfg.scenario.n, 2, derive_seed(rs, 1));
      std::vector<std::array<double, 2>> z(methods);
      for (int arm = 0; arm < 2; ++arm) {
        const ScoreComponents sc = contaminated_components(
            sim, c, arm == 0 ? std::nullopt : std::optional<FoldAssignment>(folds));
        const DmlEstimate e = dml_estimate(sc);
        z[0][arm] = (e.beta_hat - sim.beta) / e.se;
        for (std::size_t m = 0; m < cfg.divergences.size(); ++m) {
          const auto post = sample_posterior(sc, cfg.divergences[m], cfg.pipeline,
                                             derive_seed(rs, 2 + static_cast<std::uint64_t>(arm), m));
          z[m + 1][arm] = (post.mean - sim.beta) / post.sd;
        }
      }
      results[r] = std::move(z);
    } catch (const NumericalError&) {
    }
  });

  SplitDemoReport report;
  for (const auto& r : results) report.failures += r ? 0 : 1;
  check_failure_share(report.failures, cfg.replicates, "split demo");
  report.replicates = cfg.replicates - report.failures;
  for (std::size_t m = 0; m < methods; ++m) {
    SplitDemoArm arm;
    arm.method = m == 0 ? "DML" : cfg.divergences[m - 1].name();
    for (const auto& r : results) {
      if (!r) continue;
      arm.standardized_full.push_back((*r)[m][0]);
      arm.standardized_split.push_back((*r)[m][1]);
    }
    arm.mean_full = summarize(arm.standardized_full).mean;
    arm.mean_split = summarize(arm.standardized_split).mean;
    report.methods.push_back(std::move(arm));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Simulation-based calibration

enum class SbcPipeline {
  /// Contaminated nuisances with two-fold splitting, as in the split demo.
  SplitContamination,
  /// Cross-fitted learners on the scenario's data.
  Crossfit,
  /// Identically zero score: the posterior is the prior.
  ZeroScore,
};

inline std::string sbc_pipeline_name(SbcPipeline p) {
  switch (p) {
    case SbcPipeline::SplitContamination: return "split";
    case SbcPipeline::Crossfit: return "crossfit";
    case SbcPipeline::ZeroScore: return "zero-score";
  }
  return "?";
}

inline SbcPipeline parse_sbc_pipeline(const std::string& s) {
  if (s == "split") return SbcPipeline::SplitContamination;
  if (s == "crossfit") return SbcPipeline::Crossfit;
  if (s == "zero-score" || s == "zero") return SbcPipeline::ZeroScore;
  throw ConfigError("unknown validation pipeline '" + s + "' (expected split, crossfit or zero-score)");
}

struct SbcSettings {
  std::size_t m = 200;
  ScenarioSpec scenario = ScenarioSpec::split_demo();
  DivergenceSpec divergence = DivergenceSpec::el();
  SbcPipeline pipeline = SbcPipeline::SplitContamination;
  LearnerFamily learner = LearnerFamily::Lasso;
  double exponent = 1.0 / 3.0;
  /// Draws are shrunk toward the chain mean so that their variance is
  /// multiplied by this factor; 1 leaves the sampler untouched.
  double variance_scale = 1.0;
  PipelineSettings settings;
  std::uint64_t seed = 0;
};

struct ValidityReport {
  std::vector<double> h_values;
  std::vector<double> beta_draws;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
  std::size_t m = 0;
  std::size_t failures = 0;
};

/// Draws beta_k from the prior, simulates data with that effect, runs the
/// posterior pipeline and records H_k; uniformity of H is tested by KS.
inline ValidityReport run_sbc(const SbcSettings& cfg) {
  if (cfg.m < 20) throw ConfigError("simulation-based calibration needs m >= 20");
  if (!(cfg.variance_scale > 0.0)) throw ConfigError("variance_scale must be positive");
  cfg.settings.prior.validate();
  cfg.scenario.validate();
  const PriorSpec& prior = cfg.settings.prior;
  std::vector<std::optional<std::pair<double, double>>> results(cfg.m);
  parallel_for(cfg.m, [&](std::size_t k) {
    const std::uint64_t rs = derive_seed(cfg.seed, k);
    Rng rng(derive_seed(rs, 0));
    const double beta = prior.mean + std::sqrt(prior.variance) * standard_normal(rng);
    try {
      ScoreComponents sc;
      switch (cfg.pipeline) {
        case SbcPipeline::ZeroScore:
          sc.a = Vector::Zero(static_cast<Eigen::Index>(cfg.scenario.n));
          sc.b = sc.a;
          break;
        case SbcPipeline::SplitContamination: {
          const SimulatedData sim = simulate_with_truth(cfg.scenario, beta, derive_seed(rs, 1));
          const double c = cfg.exponent < 0.0
                               ? 0.0
                               : std::pow(static_cast<double>(cfg.scenario.n), -cfg.exponent);
          sc = contaminated_components(sim, c, make_folds(cfg.scenario.n, 2, derive_seed(rs, 2)));
          break;
        }
        case SbcPipeline::Crossfit: {
          const ObservationSet obs = simulate(cfg.scenario, beta, derive_seed(rs, 1));
          sc = crossfit_score(obs, cfg.learner, cfg.settings, derive_seed(rs, 2));
          break;
        }
      }
      auto post = sample_posterior(sc, cfg.divergence, cfg.settings, derive_seed(rs, 3));
      if (cfg.variance_scale != 1.0) {
        const double shrink = std::sqrt(cfg.variance_scale);
        for (double& b : post.chain) b = post.mean + shrink * (b - post.mean);
      }
      results[k] = std::make_pair(h_statistic(post.chain, beta), beta);
    } catch (const NumericalError&) {
    } catch (const DataError&) {
    }
  });
  ValidityReport report;
  for (const auto& r : results) {
    if (r) {
      report.h_values.push_back(r->first);
      report.beta_draws.push_back(r->second);
    } else {
      ++report.failures;
    }
  }
  check_failure_share(report.failures, cfg.m, "calibration run");
  report.m = report.h_values.size();
  const KsResult ks = ks_uniform_test(report.h_values);
  report.ks_statistic = ks.statistic;
  report.ks_p_value = ks.p_value;
  return report;
}

}  // namespace bdml
