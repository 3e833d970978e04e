#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"
#include "failscope/rng.hpp"

namespace failscope {

/// Edge predicate on an encoded column: `x[feature] <= threshold` (left) or
/// `x[feature] > threshold` (right).
struct SplitPredicate {
  std::size_t feature = 0;
  bool greater = false;
  Scalar threshold = 0.0;

  bool holds(const Eigen::Ref<const RowVector>& x) const noexcept {
    return greater ? x[static_cast<Eigen::Index>(feature)] > threshold
                   : x[static_cast<Eigen::Index>(feature)] <= threshold;
  }
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  Scalar threshold = 0.0;
  int left = -1;
  int right = -1;
  Scalar value = 0.0;   // mean target (regression) or weighted fail fraction (classification)
  Scalar weight = 0.0;  // total sample weight reaching the node
  std::size_t samples = 0;
  int depth = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct TreePath {
  int leaf = -1;
  int depth = 0;
  std::vector<SplitPredicate> predicates;  // root to leaf
};

/// Binary CART tree stored as a flat node array; node 0 is the root.
class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  static DecisionTree leaf(Scalar value, std::size_t samples = 0);

  int leaf_of(const Eigen::Ref<const RowVector>& x) const;
  Scalar predict(const Eigen::Ref<const RowVector>& x) const { return nodes[static_cast<std::size_t>(leaf_of(x))].value; }
  /// Root-to-leaf paths, left subtrees first.
  std::vector<TreePath> paths() const;
  std::size_t leaf_count() const;
  int depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);
};

struct TreeParams {
  int max_depth = 8;
  std::size_t min_leaf = 1;
  Scalar max_features = 1.0;  // fraction of columns considered per split
};

/// Greedy squared-error tree. Ties between equally good splits go to the lowest
/// column, then the lowest threshold. `rng` is only used for column subsampling.
DecisionTree fit_regression_tree(const Matrix& X, const Vector& y, std::span<const std::size_t> rows,
                                 const TreeParams& params, Rng* rng = nullptr);
DecisionTree fit_regression_tree(const Matrix& X, const Vector& y, const TreeParams& params);

/// Greedy weighted-Gini tree over fail indicators (1 = fail).
DecisionTree fit_gini_tree(const Matrix& X, const Vector& is_fail, const Vector& sample_weight,
                           const TreeParams& params);

}  // namespace failscope
