#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <variant>

#include "bdml/error.hpp"
#include "bdml/learners/forest.hpp"
#include "bdml/learners/lasso.hpp"
#include "bdml/learners/mlp.hpp"
#include "bdml/score.hpp"

namespace bdml {

enum class LearnerFamily { Lasso, RandomForest, NeuralNet };
enum class LearnerTask { Regression, BinaryProbability };

inline std::string family_name(LearnerFamily f) {
  switch (f) {
    case LearnerFamily::Lasso: return "Lasso";
    case LearnerFamily::RandomForest: return "RandomForest";
    case LearnerFamily::NeuralNet: return "NeuralNet";
  }
  return "?";
}

inline LearnerFamily parse_family(const std::string& s) {
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "lasso") return LearnerFamily::Lasso;
  if (k == "rf" || k == "forest" || k == "randomforest" || k == "random_forest") {
    return LearnerFamily::RandomForest;
  }
  if (k == "nn" || k == "mlp" || k == "neuralnet" || k == "neural_net") {
    return LearnerFamily::NeuralNet;
  }
  throw ConfigError("unknown learner family '" + s + "'");
}

struct LearnerSpec {
  LearnerFamily family = LearnerFamily::Lasso;
  LearnerTask task = LearnerTask::Regression;
  std::uint64_t seed = 0;
  learners::LassoSettings lasso;
  learners::ForestSettings forest;
  learners::MlpSettings mlp;
};

/// Intercept-only model, used for constant or one-class targets.
struct ConstantModel {
  double value = 0.0;
};

class FittedLearner {
 public:
  using State = std::variant<ConstantModel, learners::LassoModel, learners::ForestModel,
                             learners::MlpModel>;

  FittedLearner(LearnerSpec spec, State state, std::size_t n, std::size_t p, bool constant)
      : spec_(std::move(spec)), state_(std::move(state)), train_n_(n), train_p_(p),
        constant_target_(constant) {}

  Vector predict(const Matrix& x_new) const {
    if (static_cast<std::size_t>(x_new.cols()) != train_p_) {
      throw DataError("predict: expected " + std::to_string(train_p_) + " columns, got " +
                      std::to_string(x_new.cols()));
    }
    Vector out = std::visit(
        [&](const auto& m) -> Vector {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, ConstantModel>) {
            return Vector::Constant(x_new.rows(), m.value);
          } else {
            return m.predict(x_new);
          }
        },
        state_);
    if (spec_.task == LearnerTask::BinaryProbability) out = out.cwiseMax(0.0).cwiseMin(1.0);
    return out;
  }

  const LearnerSpec& spec() const noexcept { return spec_; }
  const State& state() const noexcept { return state_; }
  std::size_t train_n() const noexcept { return train_n_; }
  std::size_t train_p() const noexcept { return train_p_; }
  /// Set when the training target had no variation.
  bool constant_target() const noexcept { return constant_target_; }
  /// CV-selected penalty; zero for non-lasso models.
  double chosen_penalty() const {
    if (const auto* m = std::get_if<learners::LassoModel>(&state_)) return m->penalty;
    return 0.0;
  }

 private:
  LearnerSpec spec_;
  State state_;
  std::size_t train_n_;
  std::size_t train_p_;
  bool constant_target_;
};

inline FittedLearner fit(const LearnerSpec& spec, const Matrix& x, const Vector& target) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (static_cast<std::size_t>(target.size()) != n) {
    throw DataError("fit: target length " + std::to_string(target.size()) + " != rows " +
                    std::to_string(n));
  }
  if (p < 1) throw DataError("fit: need at least one feature column");
  if (n < 1) throw DataError("fit: empty training set");
  const bool binary = spec.task == LearnerTask::BinaryProbability;
  if (binary) {
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      if (target[i] != 0.0 && target[i] != 1.0) {
        throw DataError("BinaryProbability learner needs a 0/1 target");
      }
    }
  }
  if (target.maxCoeff() == target.minCoeff()) {
    double c = target[0];
    if (binary) c = std::clamp(c, kPropensityClip, 1.0 - kPropensityClip);
    return FittedLearner(spec, ConstantModel{c}, n, p, true);
  }
  switch (spec.family) {
    case LearnerFamily::Lasso:
      if (n < 10) throw DataError("lasso cross-validation needs at least 10 training rows");
      return FittedLearner(spec, learners::fit_lasso_cv(x, target, binary, spec.seed, spec.lasso),
                           n, p, false);
    case LearnerFamily::RandomForest:
      return FittedLearner(spec, learners::fit_forest(x, target, binary, spec.seed, spec.forest),
                           n, p, false);
    case LearnerFamily::NeuralNet:
      return FittedLearner(spec, learners::fit_mlp(x, target, binary, spec.seed, spec.mlp), n, p,
                           false);
  }
  throw ConfigError("unknown learner family");
}

}  // namespace bdml
