#pragma once

// Independent reference computations used only by the test suites.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace bdml::oracle {

/// Generic CR(q) straight from the family definition (log limits at 0, -1).
inline double reference_cr(const Eigen::VectorXd& q, double lambda) {
  const double n = static_cast<double>(q.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double nq = n * q[i];
    if (lambda == 0.0) {
      acc += -2.0 * std::log(nq);
    } else if (lambda == -1.0) {
      acc += 2.0 * n * q[i] * std::log(nq);
    } else {
      acc += 2.0 / (lambda * (1.0 + lambda)) * (std::pow(nq, -lambda) - 1.0);
    }
  }
  return acc;
}

/// Minimum CR over exactly feasible q: every coordinate except the argmin and
/// argmax of psi runs over a grid, the remaining two are solved from
/// sum q = 1 and sum q psi = 0. Strictly positive q only.
inline double grid_oracle_cr(const Eigen::VectorXd& psi, double lambda, double step) {
  const Eigen::Index n = psi.size();
  Eigen::Index lo, hi;
  psi.minCoeff(&lo);
  psi.maxCoeff(&hi);
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != lo && i != hi) free.push_back(i);
  }
  const int levels = static_cast<int>(std::round(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd q(n);
  std::vector<int> k(free.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t depth, int used) {
    if (depth == free.size()) {
      double s = 0.0, m = 0.0;
      for (std::size_t j = 0; j < free.size(); ++j) {
        q[free[j]] = k[j] * step;
        s += q[free[j]];
        m += q[free[j]] * psi[free[j]];
      }
      const double rest = 1.0 - s;
      // q_lo psi_lo + q_hi psi_hi = -m, q_lo + q_hi = rest
      const double q_lo = (-m - rest * psi[hi]) / (psi[lo] - psi[hi]);
      const double q_hi = rest - q_lo;
      if (q_lo <= 0.0 || q_hi <= 0.0) return;
      q[lo] = q_lo;
      q[hi] = q_hi;
      best = std::min(best, reference_cr(q, lambda));
      return;
    }
    for (int v = 1; used + v < levels; ++v) {
      k[depth] = v;
      rec(depth + 1, used + v);
    }
  };
  rec(0, 0);
  return best;
}

/// Empirical quantile with linear interpolation between order statistics.
inline double type7_quantile(std::vector<double> v, double prob) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace bdml::oracle
