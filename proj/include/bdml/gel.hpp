#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>

#include "bdml/error.hpp"
#include "bdml/score.hpp"

namespace bdml {

/// Cressie-Read divergence family member, indexed by lambda.
struct DivergenceSpec {
  double lambda = 0.0;

  static DivergenceSpec el() { return {0.0}; }
  static DivergenceSpec etel() { return {-1.0}; }
  static DivergenceSpec hd() { return {-0.5}; }

  bool is_exponential() const noexcept { return lambda == -1.0; }

  std::string name() const {
    if (lambda == 0.0) return "EL";
    if (lambda == -1.0) return "ETEL";
    if (lambda == -0.5) return "HD";
    char buf[48];
    std::snprintf(buf, sizeof buf, "CR(%.12g)", lambda);
    return buf;
  }
};

/// Accepts el, etel, hd (any case) or a numeric lambda.
inline DivergenceSpec parse_divergence(const std::string& s) {
  std::string k = s;
  for (char& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "el") return DivergenceSpec::el();
  if (k == "etel") return DivergenceSpec::etel();
  if (k == "hd") return DivergenceSpec::hd();
  char* end = nullptr;
  const double v = std::strtod(k.c_str(), &end);
  if (k.empty() || end != k.c_str() + k.size() || !std::isfinite(v)) {
    throw ConfigError("unknown divergence '" + s + "' (expected el, etel, hd or a number)");
  }
  return {v};
}

struct FeasibilityReport {
  bool feasible = false;
  double min_psi = 0.0;
  double max_psi = 0.0;
};

struct GelOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Previous solution's tilt; used as the Newton starting point when valid.
  std::optional<double> tilt_hint;
};

/// Weights have the form p_i = (1/n)[1 + s + t psi_i]^(-1/(1+lambda)), or
/// p_i proportional to exp(t psi_i) for ETEL (where s is not defined).
/// `tilt` is t/(1+s) (or t for ETEL) and is what warm starts consume.
struct GelSolution {
  Vector weights;
  std::optional<double> s;
  double t = 0.0;
  double tilt = 0.0;
  double log_profile = 0.0;
  bool converged = false;
  int iterations = 0;
  double sum_residual = 0.0;
  double moment_residual = 0.0;
};

/// Zero must lie strictly inside the hull of psi. The all-zero vector is the
/// single tie case accepted: uniform weights satisfy it. Any other vector
/// touching zero only from one side needs zero weights, which the
/// log-likelihood cannot represent.
inline FeasibilityReport check_feasibility(const Vector& psi) {
  FeasibilityReport r;
  if (psi.size() == 0) return r;
  r.min_psi = psi.minCoeff();
  r.max_psi = psi.maxCoeff();
  r.feasible = (r.min_psi < 0.0 && r.max_psi > 0.0) ||
               (r.min_psi == 0.0 && r.max_psi == 0.0);
  return r;
}

namespace detail {

// Newton stops once |h| is this small relative to sum |z_i w_i|.
inline constexpr double kTiltResidual = 1e-13;

struct TiltRoot {
  double tilt = 0.0;
  int iterations = 0;
};

// Root of h(tau) = sum z_i (1 + tau z_i)^(-alpha) on the open interval where
// every base is positive. For alpha > 0 h falls from +inf to -inf, so the
// root exists and is unique; for alpha < 0 h is bounded and increasing and
// may have no interior root.
inline TiltRoot solve_power_tilt(const Vector& z, double alpha, std::optional<double> hint,
                                 int max_iter) {
  const double zmax = z.maxCoeff();
  const double zmin = z.minCoeff();
  double lo = -1.0 / zmax;
  double hi = -1.0 / zmin;
  const bool decreasing = alpha > 0.0;

  double mass = 0.0;  // sum |z_i w_i|, the rounding scale of h
  auto eval = [&](double tau, double& h, double& dh) {
    h = 0.0;
    dh = 0.0;
    mass = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double x = 1.0 + tau * z[i];
      double w;
      if (alpha == 1.0) {
        w = 1.0 / x;
      } else if (alpha == 2.0) {
        const double r = 1.0 / x;
        w = r * r;
      } else {
        w = std::pow(x, -alpha);
      }
      h += z[i] * w;
      mass += std::abs(z[i]) * w;
      dh += z[i] * z[i] * w / x;
    }
    dh *= -alpha;
  };

  if (!decreasing) {
    // Endpoints are finite here; a root must be bracketed by them.
    double hlo = 0.0, hhi = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      hlo += z[i] * std::pow(std::max(0.0, 1.0 + lo * z[i]), -alpha);
      hhi += z[i] * std::pow(std::max(0.0, 1.0 + hi * z[i]), -alpha);
    }
    if (!(hlo < 0.0 && hhi > 0.0)) {
      throw InfeasibleMoment("Cressie-Read optimum lies on the simplex boundary");
    }
  }

  double tau = 0.0;
  if (hint && *hint > lo && *hint < hi) tau = *hint;
  TiltRoot out;
  double prev_abs_h = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    double h, dh;
    eval(tau, h, dh);
    const bool root_right = decreasing ? (h > 0.0) : (h < 0.0);
    if (root_right) {
      lo = tau;
    } else {
      hi = tau;
    }
    if (std::abs(h) <= kTiltResidual * mass) break;
    double next = tau - h / dh;
    // Bisect when Newton leaves the bracket or stops halving |h|.
    if (!(next > lo && next < hi) || !std::isfinite(next) || std::abs(h) > 0.5 * prev_abs_h) {
      next = 0.5 * (lo + hi);
    }
    prev_abs_h = std::abs(h);
    const double step = std::abs(next - tau);
    tau = next;
    if (step <= 1e-15 * (1.0 + std::abs(tau)) || hi - lo <= 1e-15 * (1.0 + std::abs(tau))) {
      break;
    }
  }
  out.tilt = tau;
  return out;
}

// Root of h(t) = sum z_i exp(t z_i); h is increasing.
inline TiltRoot solve_exponential_tilt(const Vector& z, std::optional<double> hint,
                                       int max_iter) {
  double mass = 0.0;
  auto eval = [&](double t, double& h, double& dh) {
    const double m = (t * z).maxCoeff();
    h = 0.0;
    dh = 0.0;
    mass = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double e = std::exp(t * z[i] - m);
      h += z[i] * e;
      mass += std::abs(z[i]) * e;
      dh += z[i] * z[i] * e;
    }
  };
  TiltRoot out;
  double t0 = hint.value_or(0.0);
  if (!std::isfinite(t0)) t0 = 0.0;
  double h, dh;
  eval(t0, h, dh);
  ++out.iterations;
  if (std::abs(h) <= kTiltResidual * mass) {
    out.tilt = t0;
    return out;
  }
  // Grow a bracket geometrically away from t0, starting from twice the
  // Newton step.
  double lo = t0, hi = t0;
  const double dir = h > 0.0 ? -1.0 : 1.0;
  double width = std::clamp(2.0 * std::abs(h / dh), 1e-8, 1.0);
  for (;;) {
    const double probe = t0 + dir * width;
    double hp, dhp;
    eval(probe, hp, dhp);
    ++out.iterations;
    if ((dir < 0.0 && hp < 0.0) || (dir > 0.0 && hp > 0.0)) {
      (dir < 0.0 ? lo : hi) = probe;
      break;
    }
    (dir < 0.0 ? hi : lo) = probe;
    width *= 2.0;
    if (width > 1e12 || out.iterations > max_iter) {
      throw NonConvergence("exponential tilt: failed to bracket the root", 0.0,
                           std::abs(hp));
    }
  }
  double t = std::clamp(t0, lo, hi);
  double prev_abs_h = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    ++out.iterations;
    eval(t, h, dh);
    if (std::abs(h) <= kTiltResidual * mass) break;
    if (h > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    double next = t - h / dh;
    if (!(next > lo && next < hi) || !std::isfinite(next) || std::abs(h) > 0.5 * prev_abs_h) {
      next = 0.5 * (lo + hi);
    }
    prev_abs_h = std::abs(h);
    const double step = std::abs(next - t);
    t = next;
    if (step <= 1e-15 * (1.0 + std::abs(t)) || hi - lo <= 1e-15 * (1.0 + std::abs(t))) break;
  }
  out.tilt = t;
  return out;
}

}  // namespace detail

/// Minimizes CR(p) subject to sum p = 1, p >= 0 and sum p psi = 0 through the
/// one-dimensional tilt equation of the dual.
inline GelSolution solve_weights(const Vector& psi, const DivergenceSpec& div,
                                 const GelOptions& opt = {}) {
  const Eigen::Index n = psi.size();
  if (n == 0) throw DataError("solve_weights: empty moment vector");
  if (!std::isfinite(div.lambda)) throw ConfigError("divergence lambda must be finite");
  detail::require_finite(psi, "psi");
  const FeasibilityReport feas = check_feasibility(psi);
  if (!feas.feasible) {
    throw InfeasibleMoment("zero is not inside the convex hull of psi (min=" +
                           std::to_string(feas.min_psi) + ", max=" +
                           std::to_string(feas.max_psi) + ")");
  }

  GelSolution sol;
  const double dn = static_cast<double>(n);
  if (feas.min_psi == 0.0 && feas.max_psi == 0.0) {
    sol.weights = Vector::Constant(n, 1.0 / dn);
    if (!div.is_exponential()) sol.s = 0.0;
    sol.log_profile = -dn * std::log(dn);
    sol.converged = true;
    return sol;
  }

  // Constraint set is invariant to positive rescaling of psi.
  const double scale = std::max(-feas.min_psi, feas.max_psi);
  const Vector z = psi / scale;
  std::optional<double> hint;
  if (opt.tilt_hint && std::isfinite(*opt.tilt_hint)) hint = *opt.tilt_hint * scale;

  Vector log_w(n);
  double scaled_tilt;
  if (div.is_exponential()) {
    const auto root = detail::solve_exponential_tilt(z, hint, opt.max_iter);
    scaled_tilt = root.tilt;
    sol.iterations = root.iterations;
    log_w = scaled_tilt * z;
  } else {
    const double alpha = 1.0 / (1.0 + div.lambda);
    const auto root = detail::solve_power_tilt(z, alpha, hint, opt.max_iter);
    scaled_tilt = root.tilt;
    sol.iterations = root.iterations;
    for (Eigen::Index i = 0; i < n; ++i) log_w[i] = -alpha * std::log1p(scaled_tilt * z[i]);
  }
  const double m = log_w.maxCoeff();
  const double log_total = m + std::log((log_w.array() - m).exp().sum());
  const Vector log_p = log_w.array() - log_total;
  sol.weights = log_p.array().exp();
  sol.log_profile = log_p.sum();
  sol.tilt = scaled_tilt / scale;
  if (div.is_exponential()) {
    sol.t = sol.tilt;
  } else {
    // n p_i = (1+s)^(-alpha) (1 + tilt psi_i)^(-alpha)  =>  1+s = (n e^{log p_i - log w_i})^(-1/alpha)
    const double alpha = 1.0 / (1.0 + div.lambda);
    const double one_plus_s = std::exp(-(std::log(dn) - log_total) / alpha);
    sol.s = one_plus_s - 1.0;
    sol.t = sol.tilt * one_plus_s;
  }
  sol.sum_residual = std::abs(sol.weights.sum() - 1.0);
  sol.moment_residual = std::abs(sol.weights.dot(psi));
  const bool positive = (sol.weights.array() > 0.0).all();
  sol.converged = positive && sol.sum_residual <= opt.tol &&
                  sol.moment_residual <= opt.tol * std::max(1.0, scale);
  if (!sol.converged) {
    throw NonConvergence("GEL dual did not converge after " +
                             std::to_string(sol.iterations) + " iterations",
                         sol.sum_residual, sol.moment_residual);
  }
  return sol;
}

/// CR(p); the lambda = 0 and lambda = -1 members use their log limits.
inline double cr_divergence(const Vector& weights, const DivergenceSpec& div) {
  const double n = static_cast<double>(weights.size());
  if (weights.size() == 0) throw DataError("cr_divergence: empty weights");
  if (!(weights.array() > 0.0).all()) throw DataError("cr_divergence: nonpositive weight");
  const double lam = div.lambda;
  double acc = 0.0;
  if (lam == 0.0) {
    for (Eigen::Index i = 0; i < weights.size(); ++i) acc += std::log(n * weights[i]);
    return -2.0 * acc;
  }
  if (lam == -1.0) {
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      acc += weights[i] * std::log(n * weights[i]);
    }
    return 2.0 * n * acc;
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += std::pow(n * weights[i], -lam) - 1.0;
  }
  return 2.0 / (lam * (1.0 + lam)) * acc;
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Sum of log weights at beta, or kNegInf when beta violates the hull condition.
inline double log_profile_likelihood(const ScoreComponents& sc, double beta,
                                     const DivergenceSpec& div,
                                     const GelOptions& opt = {}) {
  const Vector psi = evaluate_score(sc, beta);
  if (!check_feasibility(psi).feasible) return kNegInf;
  try {
    return solve_weights(psi, div, opt).log_profile;
  } catch (const InfeasibleMoment&) {
    return kNegInf;
  }
}

}  // namespace bdml
