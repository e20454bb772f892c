#pragma once

#include <cmath>

#include "bdml/error.hpp"
#include "bdml/score.hpp"

namespace bdml {

inline constexpr double kZ975 = 1.959963984540054;

struct DmlEstimate {
  double beta_hat = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Root of the pooled moment sum_i (a_i - beta b_i) = 0.
inline double dml_point(const ScoreComponents& sc) {
  const double denom = sc.b.sum();
  if (denom == 0.0 || !std::isfinite(denom)) {
    throw NumericalError("degenerate design: sum of score slopes is zero");
  }
  return sc.a.sum() / denom;
}

/// Sandwich variance mean(psi^2) / mean(b)^2 of sqrt(n)(beta_hat - beta).
inline double dml_variance(const ScoreComponents& sc, double beta_hat) {
  if (sc.n() < 2) throw DataError("dml_variance needs n >= 2");
  const double mb = sc.b.mean();
  if (mb == 0.0) throw NumericalError("degenerate design: mean score slope is zero");
  const Vector psi = evaluate_score(sc, beta_hat);
  return psi.squaredNorm() / static_cast<double>(sc.n()) / (mb * mb);
}

inline DmlEstimate dml_estimate(const ScoreComponents& sc) {
  DmlEstimate e;
  e.beta_hat = dml_point(sc);
  e.se = std::sqrt(dml_variance(sc, e.beta_hat) / static_cast<double>(sc.n()));
  e.lo = e.beta_hat - kZ975 * e.se;
  e.hi = e.beta_hat + kZ975 * e.se;
  return e;
}

}  // namespace bdml
