#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "bdml/error.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml::learners {

struct LassoSettings {
  int path_length = 100;
  double min_ratio = 1e-3;
  int cv_folds = 5;
  double tol = 1e-7;
  int max_sweeps = 5000;
  int max_irls = 50;
  /// Path stops early once this fraction of null deviance is explained.
  double max_dev_ratio = 0.99999;
};

/// Column centering and scaling (population sd). Zero-variance columns keep
/// scale 1 and are never selected.
struct Standardizer {
  Vector center;
  Vector scale;
  std::vector<bool> usable;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.center = x.colwise().mean();
    s.scale.resize(x.cols());
    s.usable.assign(static_cast<std::size_t>(x.cols()), true);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.center[j]).square().sum() / n;
      if (var <= 1e-24 * (1.0 + s.center[j] * s.center[j])) {
        s.scale[j] = 1.0;
        s.usable[static_cast<std::size_t>(j)] = false;
      } else {
        s.scale[j] = std::sqrt(var);
      }
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!usable[static_cast<std::size_t>(j)]) out.col(j).setZero();
    }
    return out;
  }
};

/// Linear predictor in the original coordinates.
struct LassoModel {
  double intercept = 0.0;
  Vector coef;
  double penalty = 0.0;
  bool logistic = false;

  Vector predict(const Matrix& x) const {
    Vector eta = (x * coef).array() + intercept;
    if (!logistic) return eta;
    return eta.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
};

namespace detail {

inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

// Coefficients along a decreasing penalty path, on standardized columns.
struct PathFit {
  std::vector<Vector> beta;
  std::vector<double> intercept;  // on the centered/standardized scale
};

// Weighted coordinate descent on (1/2n) sum w_i (r_i)^2 + lam |beta|_1 with a
// free intercept; r is the current residual, updated in place.
inline void weighted_cd(const Matrix& xs, const Vector& w, const Vector& xw2, Vector& r,
                        Vector& beta, double& b0, double lam,
                        const std::vector<bool>& usable, const LassoSettings& cfg,
                        bool fit_intercept) {
  const double n = static_cast<double>(xs.rows());
  const double wsum = w.sum();
  const Eigen::Index p = xs.cols();
  std::vector<Eigen::Index> active;
  auto sweep = [&](bool full) {
    double max_change = 0.0;
    auto update = [&](Eigen::Index j) {
      if (!usable[static_cast<std::size_t>(j)] || xw2[j] <= 0.0) return;
      const double old = beta[j];
      const double grad = xs.col(j).cwiseProduct(w).dot(r) / n;
      const double next = soft_threshold(grad + xw2[j] * old, lam) / xw2[j];
      if (next != old) {
        r.noalias() -= (next - old) * xs.col(j);
        beta[j] = next;
        max_change = std::max(max_change, xw2[j] * (next - old) * (next - old));
      }
    };
    if (full) {
      for (Eigen::Index j = 0; j < p; ++j) update(j);
    } else {
      for (Eigen::Index j : active) update(j);
    }
    if (fit_intercept) {
      const double shift = w.dot(r) / wsum;
      if (shift != 0.0) {
        b0 += shift;
        r.array() -= shift;
        max_change = std::max(max_change, (wsum / n) * shift * shift);
      }
    }
    return max_change;
  };
  for (int outer = 0; outer < cfg.max_sweeps; ++outer) {
    const double change = sweep(true);
    active.clear();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    if (change < cfg.tol) return;
    for (int inner = 0; inner < cfg.max_sweeps; ++inner) {
      if (sweep(false) < cfg.tol) break;
    }
  }
}

inline PathFit gaussian_path(const Matrix& xs, const Vector& yc, const std::vector<double>& lams,
                             const std::vector<bool>& usable, const LassoSettings& cfg) {
  const Eigen::Index n = xs.rows();
  const Vector w = Vector::Ones(n);
  const Vector xw2 = xs.colwise().squaredNorm().transpose() / static_cast<double>(n);
  Vector beta = Vector::Zero(xs.cols());
  double b0 = 0.0;
  Vector r = yc;
  const double null_dev = yc.squaredNorm();
  PathFit out;
  bool saturated = false;
  for (double lam : lams) {
    if (!saturated) {
      weighted_cd(xs, w, xw2, r, beta, b0, lam, usable, cfg, false);
      if (null_dev > 0.0 && 1.0 - r.squaredNorm() / null_dev >= cfg.max_dev_ratio) {
        saturated = true;
      }
    }
    out.beta.push_back(beta);
    out.intercept.push_back(0.0);
  }
  return out;
}

inline double binomial_deviance(const Vector& y, const Vector& eta) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // log(1 + e^eta) - y eta, computed stably
    const double e = eta[i];
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += 2.0 * (softplus - y[i] * e);
  }
  return dev;
}

inline PathFit logistic_path(const Matrix& xs, const Vector& y, const std::vector<double>& lams,
                             const std::vector<bool>& usable, const LassoSettings& cfg) {
  const Eigen::Index n = xs.rows();
  const double ybar = y.mean();
  Vector beta = Vector::Zero(xs.cols());
  double b0 = std::log(ybar / (1.0 - ybar));
  const double null_dev = binomial_deviance(y, Vector::Constant(n, b0));
  PathFit out;
  bool saturated = false;
  for (double lam : lams) {
    if (!saturated) {
      for (int it = 0; it < cfg.max_irls; ++it) {
        Vector eta = (xs * beta).array() + b0;
        Vector prob = eta.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Vector w = prob.cwiseProduct(Vector::Ones(n) - prob).cwiseMax(1e-5);
        Vector r = (y - prob).cwiseQuotient(w);  // working residual z - eta
        const Vector xw2 =
            (xs.array().square().colwise() * w.array()).colwise().sum().transpose() /
            static_cast<double>(n);
        const Vector beta_old = beta;
        const double b0_old = b0;
        weighted_cd(xs, w, xw2, r, beta, b0, lam, usable, cfg, true);
        const double change =
            std::max((beta - beta_old).cwiseAbs().maxCoeff(), std::abs(b0 - b0_old));
        if (change < 1e-6) break;
      }
      const Vector eta = (xs * beta).array() + b0;
      if (null_dev > 0.0 && 1.0 - binomial_deviance(y, eta) / null_dev >= cfg.max_dev_ratio) {
        saturated = true;
      }
    }
    out.beta.push_back(beta);
    out.intercept.push_back(b0);
  }
  return out;
}

inline std::vector<double> penalty_grid(double lam_max, const LassoSettings& cfg) {
  std::vector<double> lams(static_cast<std::size_t>(cfg.path_length));
  for (int k = 0; k < cfg.path_length; ++k) {
    const double frac = cfg.path_length == 1 ? 0.0 : static_cast<double>(k) / (cfg.path_length - 1);
    lams[static_cast<std::size_t>(k)] = lam_max * std::pow(cfg.min_ratio, frac);
  }
  return lams;
}

// Fits the whole path on (x, y) with standardization estimated on x itself.
struct StandardizedPath {
  Standardizer stdz;
  double y_mean = 0.0;
  PathFit path;
};

inline StandardizedPath fit_path(const Matrix& x, const Vector& y, bool logistic,
                                 const std::vector<double>& lams, const LassoSettings& cfg) {
  StandardizedPath sp;
  sp.stdz = Standardizer::fit(x);
  const Matrix xs = sp.stdz.apply(x);
  sp.y_mean = y.mean();
  if (logistic) {
    sp.path = logistic_path(xs, y, lams, sp.stdz.usable, cfg);
  } else {
    const Vector yc = y.array() - sp.y_mean;
    sp.path = gaussian_path(xs, yc, lams, sp.stdz.usable, cfg);
  }
  return sp;
}

inline LassoModel to_model(const StandardizedPath& sp, std::size_t k, double lam, bool logistic) {
  LassoModel m;
  m.logistic = logistic;
  m.penalty = lam;
  m.coef = sp.path.beta[k].cwiseQuotient(sp.stdz.scale);
  const double base = logistic ? sp.path.intercept[k] : sp.y_mean;
  m.intercept = base - sp.stdz.center.dot(m.coef);
  return m;
}

inline double max_abs_correlation(const Matrix& xs, const Vector& yc) {
  return (xs.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(xs.rows());
}

}  // namespace detail

/// Lasso (squared-error or logistic) with the penalty picked by K-fold CV
/// (out-of-fold squared error, or log-loss for the logistic task).
inline LassoModel fit_lasso_cv(const Matrix& x, const Vector& y, bool logistic,
                               std::uint64_t seed, const LassoSettings& cfg = {}) {
  const Eigen::Index n = x.rows();
  const Standardizer full_stdz = Standardizer::fit(x);
  const Matrix xs = full_stdz.apply(x);
  const Vector yc = y.array() - y.mean();
  const double lam_max = detail::max_abs_correlation(xs, yc);
  if (!(lam_max > 0.0)) {
    LassoModel m;
    m.logistic = logistic;
    m.coef = Vector::Zero(x.cols());
    const double ybar = y.mean();
    m.intercept = logistic ? std::log(ybar / (1.0 - ybar)) : ybar;
    return m;
  }
  const std::vector<double> lams = detail::penalty_grid(lam_max, cfg);

  // Balanced random fold labels.
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(i)] = static_cast<int>(i % cfg.cv_folds);
  Rng rng(seed);
  std::shuffle(fold.begin(), fold.end(), rng);

  std::vector<double> cv_loss(lams.size(), 0.0);
  for (int f = 0; f < cfg.cv_folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    if (va.empty() || tr.size() < 2) continue;
    Matrix xtr = x(tr, Eigen::all);
    Vector ytr = y(tr);
    Matrix xva = x(va, Eigen::all);
    Vector yva = y(va);
    const double ytr_mean = ytr.mean();
    const bool degenerate = logistic ? (ytr_mean <= 0.0 || ytr_mean >= 1.0)
                                     : (ytr.maxCoeff() == ytr.minCoeff());
    if (degenerate) {
      // Constant fallback for a one-class (or constant) training split.
      const double c = logistic ? std::clamp(ytr_mean, kPropensityClip, 1.0 - kPropensityClip)
                                : ytr_mean;
      double loss = 0.0;
      for (Eigen::Index i = 0; i < yva.size(); ++i) {
        loss += logistic ? -(yva[i] * std::log(c) + (1 - yva[i]) * std::log(1 - c))
                         : (yva[i] - c) * (yva[i] - c);
      }
      for (auto& v : cv_loss) v += loss;
      continue;
    }
    const auto sp = detail::fit_path(xtr, ytr, logistic, lams, cfg);
    for (std::size_t k = 0; k < lams.size(); ++k) {
      const Vector pred = detail::to_model(sp, k, lams[k], logistic).predict(xva);
      for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (logistic) {
          const double pr = std::clamp(pred[i], 1e-15, 1.0 - 1e-15);
          cv_loss[k] += -(yva[i] * std::log(pr) + (1 - yva[i]) * std::log(1 - pr));
        } else {
          cv_loss[k] += (yva[i] - pred[i]) * (yva[i] - pred[i]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(cv_loss.begin(), cv_loss.end()) - cv_loss.begin());
  std::vector<double> head(lams.begin(), lams.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  const auto sp = detail::fit_path(x, y, logistic, head, cfg);
  return detail::to_model(sp, best, lams[best], logistic);
}

}  // namespace bdml::learners
