#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "bdml/error.hpp"

namespace bdml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Propensity predictions for a binary treatment are kept inside this band.
inline constexpr double kPropensityClip = 1e-6;

namespace detail {

inline void require_finite(const Vector& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DataError(std::string("non-finite value in ") + name + " at index " +
                      std::to_string(i));
    }
  }
}

}  // namespace detail

/// The (Y, D, X) triple for n units. Immutable once constructed.
class ObservationSet {
 public:
  static constexpr std::size_t kMinUnits = 4;

  ObservationSet(Vector y, Vector d, Matrix x)
      : y_(std::move(y)), d_(std::move(d)), x_(std::move(x)) {
    if (y_.size() != d_.size() || y_.size() != x_.rows()) {
      throw DataError("observation containers disagree on n: y=" +
                      std::to_string(y_.size()) + " d=" + std::to_string(d_.size()) +
                      " x rows=" + std::to_string(x_.rows()));
    }
    if (static_cast<std::size_t>(y_.size()) < kMinUnits) {
      throw DataError("need at least " + std::to_string(kMinUnits) +
                      " units, got " + std::to_string(y_.size()));
    }
    detail::require_finite(y_, "y");
    detail::require_finite(d_, "d");
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      for (Eigen::Index i = 0; i < x_.rows(); ++i) {
        if (!std::isfinite(x_(i, j))) {
          throw DataError("non-finite confounder at row " + std::to_string(i) +
                          ", column " + std::to_string(j));
        }
      }
    }
  }

  const Vector& y() const noexcept { return y_; }
  const Vector& d() const noexcept { return d_; }
  const Matrix& x() const noexcept { return x_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  /// True when every treatment value is exactly 0 or 1.
  bool binary_treatment() const {
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      if (d_[i] != 0.0 && d_[i] != 1.0) return false;
    }
    return true;
  }

 private:
  Vector y_;
  Vector d_;
  Matrix x_;
};

/// PartiallingOut: g_hat estimates E[Y|X]. DirectMu: g_hat estimates mu(X).
enum class NuisanceKind { PartiallingOut, DirectMu };

struct NuisancePredictions {
  Vector pi_hat;
  Vector g_hat;
  NuisanceKind kind = NuisanceKind::PartiallingOut;

  /// Clips pi_hat into [kPropensityClip, 1 - kPropensityClip].
  void clip_propensity() {
    pi_hat = pi_hat.cwiseMax(kPropensityClip).cwiseMin(1.0 - kPropensityClip);
  }
};

/// psi_i(beta) = a_i - beta * b_i.
struct ScoreComponents {
  Vector a;
  Vector b;

  std::size_t n() const noexcept { return static_cast<std::size_t>(a.size()); }
};

inline ScoreComponents build_score_components(const ObservationSet& obs,
                                              const NuisancePredictions& nuis) {
  const auto n = static_cast<Eigen::Index>(obs.n());
  if (nuis.pi_hat.size() != n || nuis.g_hat.size() != n) {
    throw DataError("nuisance predictions have length " +
                    std::to_string(nuis.pi_hat.size()) + "/" +
                    std::to_string(nuis.g_hat.size()) + ", expected " +
                    std::to_string(n));
  }
  Vector pi = nuis.pi_hat;
  if (obs.binary_treatment()) {
    pi = pi.cwiseMax(kPropensityClip).cwiseMin(1.0 - kPropensityClip);
  }
  const Vector resid_d = obs.d() - pi;
  ScoreComponents sc;
  sc.a = resid_d.cwiseProduct(obs.y() - nuis.g_hat);
  sc.b = nuis.kind == NuisanceKind::PartiallingOut ? resid_d.cwiseProduct(resid_d)
                                                   : resid_d.cwiseProduct(obs.d());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(sc.a[i]) || !std::isfinite(sc.b[i])) {
      throw NumericalError("non-finite score component at index " + std::to_string(i));
    }
  }
  return sc;
}

inline Vector evaluate_score(const ScoreComponents& sc, double beta) {
  if (!std::isfinite(beta)) throw NumericalError("evaluate_score: non-finite beta");
  return sc.a - beta * sc.b;
}

/// Borough rate relative to the city-wide rate; 1 means no disproportionality.
inline double disproportionality_index(double borough_rate, double city_rate) {
  if (!(city_rate > 0.0) || !std::isfinite(city_rate)) {
    throw DataError("city rate must be positive and finite");
  }
  if (!(borough_rate >= 0.0) || !std::isfinite(borough_rate)) {
    throw DataError("borough rate must be non-negative and finite");
  }
  return borough_rate / city_rate;
}

}  // namespace bdml
