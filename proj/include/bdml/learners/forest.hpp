#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bdml/parallel.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml::learners {

struct ForestSettings {
  int trees = 500;
  int min_leaf = 5;
  /// Candidate features per split; 0 selects ceil(p/3) for regression and
  /// ceil(sqrt(p)) for classification.
  int mtry = 0;
  bool bootstrap = true;
};

/// CART tree with mean-valued leaves. For 0/1 targets the squared-error split
/// gain is proportional to the Gini gain, so one criterion serves both tasks
/// and leaves hold class-1 frequencies.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  static RegressionTree grow(const Matrix& x, const Vector& y, std::vector<Eigen::Index> rows,
                             int mtry, int min_leaf, Rng& rng) {
    RegressionTree tree;
    Builder b{x, y, mtry, min_leaf, rng, tree.nodes_, {}};
    b.features.resize(static_cast<std::size_t>(x.cols()));
    std::iota(b.features.begin(), b.features.end(), Eigen::Index{0});
    b.build(rows);
    return tree;
  }

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const Node& nd = nodes_[static_cast<std::size_t>(at)];
      at = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(at)].value;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Builder {
    const Matrix& x;
    const Vector& y;
    int mtry;
    int min_leaf;
    Rng& rng;
    std::vector<Node>& nodes;
    std::vector<Eigen::Index> features;

    int build(std::vector<Eigen::Index>& rows) {
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      double sum = 0.0;
      for (auto r : rows) sum += y[r];
      const double count = static_cast<double>(rows.size());
      nodes[static_cast<std::size_t>(id)].value = sum / count;

      const auto m = static_cast<int>(rows.size());
      if (m < 2 * min_leaf) return id;
      bool pure = true;
      for (auto r : rows) {
        if (y[r] != y[rows.front()]) {
          pure = false;
          break;
        }
      }
      if (pure) return id;

      // Partial Fisher-Yates draws mtry distinct candidate features.
      const auto p = features.size();
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(mtry), p);
      for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, p - 1);
        std::swap(features[j], features[pick(rng)]);
      }

      double best_gain = 0.0;
      int best_feature = -1;
      double best_threshold = 0.0;
      const double parent = sum * sum / count;
      std::vector<Eigen::Index> order(rows);
      for (std::size_t j = 0; j < k; ++j) {
        const Eigen::Index f = features[j];
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index a, Eigen::Index b) { return x(a, f) < x(b, f); });
        double left = 0.0;
        for (int i = 0; i < m - min_leaf; ++i) {
          left += y[order[static_cast<std::size_t>(i)]];
          const int nl = i + 1;
          if (nl < min_leaf) continue;
          const double xv = x(order[static_cast<std::size_t>(i)], f);
          const double xn = x(order[static_cast<std::size_t>(i + 1)], f);
          if (!(xv < xn)) continue;
          const double right = sum - left;
          const double gain = left * left / nl + right * right / (m - nl) - parent;
          if (gain > best_gain + 1e-12 * std::abs(parent)) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (xv + xn);
          }
        }
      }
      if (best_feature < 0) return id;

      std::vector<Eigen::Index> left_rows, right_rows;
      for (auto r : rows) {
        (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
      }
      rows.clear();
      rows.shrink_to_fit();
      const int l = build(left_rows);
      const int rgt = build(right_rows);
      Node& nd = nodes[static_cast<std::size_t>(id)];
      nd.feature = best_feature;
      nd.threshold = best_threshold;
      nd.left = l;
      nd.right = rgt;
      return id;
    }
  };

  std::vector<Node> nodes_;
};

struct ForestModel {
  std::vector<RegressionTree> trees;

  Vector predict(const Matrix& x) const {
    Vector out = Vector::Zero(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double acc = 0.0;
      for (const auto& t : trees) acc += t.predict(x.row(i));
      out[i] = acc / static_cast<double>(trees.size());
    }
    return out;
  }
};

inline ForestModel fit_forest(const Matrix& x, const Vector& y, bool classification,
                              std::uint64_t seed, const ForestSettings& cfg = {}) {
  const auto p = static_cast<double>(x.cols());
  int mtry = cfg.mtry;
  if (mtry <= 0) {
    mtry = static_cast<int>(classification ? std::ceil(std::sqrt(p)) : std::ceil(p / 3.0));
  }
  mtry = std::max(1, mtry);
  const Eigen::Index n = x.rows();
  ForestModel model;
  model.trees.resize(static_cast<std::size_t>(cfg.trees));
  parallel_for(static_cast<std::size_t>(cfg.trees), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    if (cfg.bootstrap) {
      std::uniform_int_distribution<Eigen::Index> draw(0, n - 1);
      for (auto& r : rows) r = draw(rng);
    } else {
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    model.trees[t] = RegressionTree::grow(x, y, std::move(rows), mtry, cfg.min_leaf, rng);
  });
  return model;
}

}  // namespace bdml::learners
