#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "bdml/learners/lasso.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml::learners {

struct MlpSettings {
  int hidden = 16;
  double learning_rate = 1e-2;
  int epochs = 2000;
};

/// Weights of a one-hidden-layer ReLU network.
struct MlpParameters {
  Matrix w1;  // hidden x inputs
  Vector b1;
  Vector w2;  // hidden
  double b2 = 0.0;

  static MlpParameters init(Eigen::Index inputs, int hidden, Rng& rng) {
    MlpParameters p;
    const double r1 = 1.0 / std::sqrt(static_cast<double>(inputs));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u1(-r1, r1), u2(-r2, r2);
    p.w1.resize(hidden, inputs);
    for (Eigen::Index j = 0; j < inputs; ++j) {
      for (Eigen::Index h = 0; h < hidden; ++h) p.w1(h, j) = u1(rng);
    }
    p.b1.resize(hidden);
    for (auto& v : p.b1) v = u1(rng);
    p.w2.resize(hidden);
    for (auto& v : p.w2) v = u2(rng);
    p.b2 = u2(rng);
    return p;
  }
};

/// Output-layer pre-activations.
inline Vector mlp_forward(const MlpParameters& p, const Matrix& x) {
  Matrix hid = ((x * p.w1.transpose()).rowwise() + p.b1.transpose()).cwiseMax(0.0);
  return (hid * p.w2).array() + p.b2;
}

/// Mean loss and its gradient: half squared error for regression, log-loss
/// on a sigmoid output for the logistic case.
inline double mlp_loss_and_gradient(const MlpParameters& p, const Matrix& x, const Vector& y,
                                    bool logistic, MlpParameters& grad) {
  const double n = static_cast<double>(x.rows());
  const Matrix pre = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
  const Matrix hid = pre.cwiseMax(0.0);
  const Vector out = (hid * p.w2).array() + p.b2;
  Vector dout(out.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (logistic) {
      const double e = out[i];
      const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      loss += softplus - y[i] * e;
      dout[i] = (1.0 / (1.0 + std::exp(-e)) - y[i]) / n;
    } else {
      const double r = out[i] - y[i];
      loss += 0.5 * r * r;
      dout[i] = r / n;
    }
  }
  grad.w2 = hid.transpose() * dout;
  grad.b2 = dout.sum();
  Matrix dhid = dout * p.w2.transpose();
  dhid = dhid.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grad.w1 = dhid.transpose() * x;
  grad.b1 = dhid.colwise().sum().transpose();
  return loss / n;
}

struct MlpModel {
  Standardizer input;
  double y_center = 0.0;
  double y_scale = 1.0;
  bool logistic = false;
  MlpParameters params;

  Vector predict(const Matrix& x) const {
    const Vector out = mlp_forward(params, input.apply(x));
    if (logistic) return out.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return out.array() * y_scale + y_center;
  }
};

/// Full-batch gradient descent on standardized inputs (and, for regression,
/// a standardized target).
inline MlpModel fit_mlp(const Matrix& x, const Vector& y, bool logistic, std::uint64_t seed,
                        const MlpSettings& cfg = {}) {
  MlpModel m;
  m.logistic = logistic;
  m.input = Standardizer::fit(x);
  const Matrix xs = m.input.apply(x);
  Vector target = y;
  if (!logistic) {
    m.y_center = y.mean();
    const double sd = std::sqrt((y.array() - m.y_center).square().mean());
    m.y_scale = sd > 0.0 ? sd : 1.0;
    target = (y.array() - m.y_center) / m.y_scale;
  }
  Rng rng(seed);
  m.params = MlpParameters::init(x.cols(), cfg.hidden, rng);
  MlpParameters grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    mlp_loss_and_gradient(m.params, xs, target, logistic, grad);
    m.params.w1 -= cfg.learning_rate * grad.w1;
    m.params.b1 -= cfg.learning_rate * grad.b1;
    m.params.w2 -= cfg.learning_rate * grad.w2;
    m.params.b2 -= cfg.learning_rate * grad.b2;
  }
  return m;
}

}  // namespace bdml::learners
