#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bdml/error.hpp"
#include "bdml/gel.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml {

/// Gaussian prior on beta.
struct PriorSpec {
  double mean = 0.0;
  double variance = 1e4;

  void validate() const {
    if (!std::isfinite(mean)) throw ConfigError("prior mean must be finite");
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw ConfigError("prior variance must be positive and finite");
    }
  }

  /// Log density up to an additive constant.
  double log_density(double beta) const {
    const double d = beta - mean;
    return -0.5 * d * d / variance;
  }
};

struct McmcConfig {
  std::size_t draws = 5000;
  std::size_t burn_in = 1000;
  /// Starting value; defaults to the pooled-moment root.
  std::optional<double> initial_beta;
  /// Proposal standard deviation; defaults to max(0.1 |start|, 0.1).
  std::optional<double> step_scale;
  bool adapt = true;
  double target_acceptance = 0.44;
  std::uint64_t seed = 0;
};

struct ChainSummary {
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct PosteriorDraws {
  std::vector<double> chain;
  double acceptance_rate = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double initial_beta = 0.0;
  double final_step_scale = 0.0;
};

/// Linear-interpolation quantile (R type 7) of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ChainSummary summarize(const std::vector<double>& chain) {
  if (chain.empty()) throw DataError("summarize: empty chain");
  ChainSummary s;
  const double n = static_cast<double>(chain.size());
  double sum = 0.0;
  for (double v : chain) sum += v;
  s.mean = sum / n;
  if (chain.size() > 1) {
    double ss = 0.0;
    for (double v : chain) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(chain);
  std::sort(sorted.begin(), sorted.end());
  s.lo = sorted_quantile(sorted, 0.025);
  s.hi = sorted_quantile(sorted, 0.975);
  return s;
}

/// Effective sample size from Geyer's initial monotone sequence estimator.
inline double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(chain.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = chain[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += c[i] * c[i + lag];
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (c0 <= 0.0) return static_cast<double>(n);
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return static_cast<double>(n) / tau;
}

/// Log prior plus log profile likelihood; -inf outside the feasible interval.
inline double log_posterior(const ScoreComponents& sc, double beta, const DivergenceSpec& div,
                            const PriorSpec& prior, const GelOptions& opt = {}) {
  const double ll = log_profile_likelihood(sc, beta, div, opt);
  if (ll == kNegInf) return kNegInf;
  return prior.log_density(beta) + ll;
}

namespace detail {

struct PosteriorPoint {
  double value = kNegInf;
  std::optional<double> tilt;
};

inline PosteriorPoint evaluate_posterior(const ScoreComponents& sc, double beta,
                                         const DivergenceSpec& div, const PriorSpec& prior,
                                         std::optional<double> hint) {
  const Vector psi = evaluate_score(sc, beta);
  if (!check_feasibility(psi).feasible) return {};
  GelOptions opt;
  opt.tilt_hint = hint;
  try {
    const GelSolution sol = solve_weights(psi, div, opt);
    return {prior.log_density(beta) + sol.log_profile, sol.tilt};
  } catch (const InfeasibleMoment&) {
    return {};
  }
}

inline bool feasible_beta(const ScoreComponents& sc, double beta) {
  return check_feasibility(evaluate_score(sc, beta)).feasible;
}

/// Scans outward from `center` on a geometric grid for a feasible beta.
inline std::optional<double> feasibility_search(const ScoreComponents& sc, double center) {
  if (feasible_beta(sc, center)) return center;
  const double base = std::max(1.0, std::abs(center));
  for (int k = -20; k <= 40; ++k) {
    const double delta = base * std::ldexp(1.0, k);
    for (double cand : {center - delta, center + delta}) {
      if (feasible_beta(sc, cand)) return cand;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Random-walk Metropolis on the GEL profile posterior. During burn-in the
/// log step size follows a Robbins-Monro recursion toward the target
/// acceptance rate; it is frozen afterwards.
inline PosteriorDraws run_chain(const ScoreComponents& sc, const DivergenceSpec& div,
                                const PriorSpec& prior, const McmcConfig& cfg) {
  prior.validate();
  if (cfg.draws < 1) throw ConfigError("draws must be at least 1");
  if (cfg.step_scale && !(*cfg.step_scale > 0.0)) {
    throw ConfigError("step_scale must be positive");
  }

  double start = prior.mean;
  if (cfg.initial_beta) {
    start = *cfg.initial_beta;
  } else {
    const double denom = sc.b.sum();
    if (denom != 0.0 && std::isfinite(denom)) start = sc.a.sum() / denom;
  }
  const auto found = detail::feasibility_search(sc, start);
  if (!found) {
    throw NumericalError(
        "no feasible starting value for beta found near " + std::to_string(start) +
        "; supply initial_beta inside the interval where the score changes sign");
  }
  double beta = *found;
  auto current = detail::evaluate_posterior(sc, beta, div, prior, std::nullopt);
  if (current.value == kNegInf) {
    throw NumericalError("starting value has zero posterior density; supply initial_beta");
  }

  double log_step = std::log(cfg.step_scale ? *cfg.step_scale
                                            : std::max(0.1 * std::abs(beta), 0.1));
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;

  PosteriorDraws out;
  out.initial_beta = beta;
  out.chain.reserve(cfg.draws);
  std::size_t accepted = 0;
  const std::size_t total = cfg.burn_in + cfg.draws;
  for (std::size_t it = 0; it < total; ++it) {
    const double proposal = beta + std::exp(log_step) * normal(rng);
    const auto cand = detail::evaluate_posterior(sc, proposal, div, prior, current.tilt);
    const double log_ratio = cand.value - current.value;
    const double accept_prob = cand.value == kNegInf ? 0.0 : std::min(1.0, std::exp(log_ratio));
    const bool accept = unif(rng) < accept_prob;
    if (accept) {
      beta = proposal;
      current = cand;
    }
    if (it < cfg.burn_in) {
      if (cfg.adapt) {
        const double gain = std::pow(static_cast<double>(it + 1), -0.6);
        log_step += gain * (accept_prob - cfg.target_acceptance);
      }
    } else {
      if (accept) ++accepted;
      out.chain.push_back(beta);
    }
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.draws);
  out.final_step_scale = std::exp(log_step);
  const ChainSummary s = summarize(out.chain);
  out.mean = s.mean;
  out.sd = s.sd;
  out.lo = s.lo;
  out.hi = s.hi;
  return out;
}

}  // namespace bdml
