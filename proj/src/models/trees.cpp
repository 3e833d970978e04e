#include "failscope/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace failscope {

DecisionTree DecisionTree::leaf(Scalar value, std::size_t samples) {
  DecisionTree t;
  TreeNode n;
  n.value = value;
  n.samples = samples;
  n.weight = static_cast<Scalar>(samples);
  t.nodes.push_back(n);
  return t;
}

int DecisionTree::leaf_of(const Eigen::Ref<const RowVector>& x) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::vector<TreePath> DecisionTree::paths() const {
  std::vector<TreePath> out;
  std::vector<SplitPredicate> stack;
  auto walk = [&](auto&& self, int i) -> void {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      out.push_back({i, n.depth, stack});
      return;
    }
    stack.push_back({static_cast<std::size_t>(n.feature), false, n.threshold});
    self(self, n.left);
    stack.back().greater = true;
    self(self, n.right);
    stack.pop_back();
  };
  if (!nodes.empty()) walk(walk, 0);
  return out;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

nlohmann::json DecisionTree::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& n : nodes)
    arr.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                   {"value", n.value}, {"weight", n.weight}, {"samples", n.samples}, {"depth", n.depth}});
  return arr;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  for (const auto& e : j) {
    TreeNode n;
    n.feature = e.at("feature").get<int>();
    n.threshold = e.at("threshold").get<Scalar>();
    n.left = e.at("left").get<int>();
    n.right = e.at("right").get<int>();
    n.value = e.at("value").get<Scalar>();
    n.weight = e.value("weight", 0.0);
    n.samples = e.value("samples", std::size_t{0});
    n.depth = e.value("depth", 0);
    t.nodes.push_back(n);
  }
  const auto count = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes)
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      raise(ErrorCode::ParseError, "tree node references a missing child");
  if (t.nodes.empty()) raise(ErrorCode::ParseError, "empty tree");
  return t;
}

namespace {

struct Split {
  int feature = -1;
  Scalar threshold = 0.0;
  Scalar score = 0.0;
};

Scalar midpoint(Scalar a, Scalar b) {
  const Scalar m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

std::vector<std::size_t> candidate_features(std::size_t p, Scalar fraction, Rng* rng) {
  std::vector<std::size_t> feats(p);
  std::iota(feats.begin(), feats.end(), std::size_t{0});
  if (rng == nullptr || fraction >= 1.0) return feats;
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<Scalar>(p))));
  rng->shuffle(feats);
  feats.resize(k);
  std::sort(feats.begin(), feats.end());
  return feats;
}

// Shared greedy builder. `Criterion` accumulates per-side statistics and scores a split.
template <typename Criterion>
class Builder {
 public:
  Builder(const Matrix& X, const Criterion& crit, const TreeParams& params, Rng* rng)
      : X_(X), crit_(crit), params_(params), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.samples = rows.size();
    node.depth = depth;
    node.value = crit_.leaf_value(rows);
    node.weight = crit_.total_weight(rows);
    tree.nodes.push_back(node);

    if (depth >= params_.max_depth || rows.size() < 2 * std::max<std::size_t>(1, params_.min_leaf) ||
        crit_.pure(rows))
      return id;

    const Split best = find_split(rows);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows)
      (X_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
    if (left.empty() || right.empty()) return id;

    tree.nodes[static_cast<std::size_t>(id)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = grow(tree, std::move(left), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    const int r = grow(tree, std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  Split find_split(std::vector<std::size_t> rows) {
    Split best;
    const Scalar parent = crit_.node_score(rows);
    Scalar best_score = parent;
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_leaf);
    const std::size_t n = rows.size();
    for (auto f : candidate_features(static_cast<std::size_t>(X_.cols()), params_.max_features, rng_)) {
      const auto col = static_cast<Eigen::Index>(f);
      std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        const Scalar xa = X_(static_cast<Eigen::Index>(a), col);
        const Scalar xb = X_(static_cast<Eigen::Index>(b), col);
        return xa < xb || (xa == xb && a < b);
      });
      auto acc = crit_.begin(rows);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        acc.move_left(rows[i]);
        const Scalar xi = X_(static_cast<Eigen::Index>(rows[i]), col);
        const Scalar xn = X_(static_cast<Eigen::Index>(rows[i + 1]), col);
        if (i + 1 < min_leaf || n - i - 1 < min_leaf || !(xi < xn)) continue;
        const Scalar score = acc.score();
        // Strict improvement over both the parent and the incumbent keeps ties
        // on the lowest column and threshold.
        if (score > best_score + 1e-12 * std::max<Scalar>(1.0, std::abs(best_score))) {
          best_score = score;
          best = {static_cast<int>(f), midpoint(xi, xn), score};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  const Criterion& crit_;
  TreeParams params_;
  Rng* rng_;
};

// Squared error: maximise sum_L^2/n_L + sum_R^2/n_R.
struct SquaredError {
  const Vector& y;

  Scalar leaf_value(const std::vector<std::size_t>& rows) const {
    if (rows.empty()) return 0.0;
    Scalar s = 0.0;
    for (auto r : rows) s += y[static_cast<Eigen::Index>(r)];
    return s / static_cast<Scalar>(rows.size());
  }
  Scalar total_weight(const std::vector<std::size_t>& rows) const { return static_cast<Scalar>(rows.size()); }
  bool pure(const std::vector<std::size_t>& rows) const {
    const Scalar first = y[static_cast<Eigen::Index>(rows.front())];
    return std::all_of(rows.begin(), rows.end(), [&](auto r) { return y[static_cast<Eigen::Index>(r)] == first; });
  }
  Scalar node_score(const std::vector<std::size_t>& rows) const {
    Scalar s = 0.0;
    for (auto r : rows) s += y[static_cast<Eigen::Index>(r)];
    return s * s / static_cast<Scalar>(rows.size());
  }

  struct Acc {
    const Vector& y;
    Scalar total_sum, left_sum = 0.0;
    std::size_t total_n, left_n = 0;
    void move_left(std::size_t r) {
      left_sum += y[static_cast<Eigen::Index>(r)];
      ++left_n;
    }
    Scalar score() const {
      const Scalar right_sum = total_sum - left_sum;
      return left_sum * left_sum / static_cast<Scalar>(left_n) +
             right_sum * right_sum / static_cast<Scalar>(total_n - left_n);
    }
  };
  Acc begin(const std::vector<std::size_t>& rows) const {
    Scalar s = 0.0;
    for (auto r : rows) s += y[static_cast<Eigen::Index>(r)];
    return Acc{y, s, 0.0, rows.size(), 0};
  }
};

// Weighted Gini: maximise W_P (1 - G_P) - [W_L G_L + W_R G_R], expressed as a
// score where larger is better.
struct WeightedGini {
  const Vector& fail;
  const Vector& w;

  static Scalar gini_mass(Scalar wf, Scalar wp) {
    const Scalar tot = wf + wp;
    if (tot <= 0.0) return 0.0;
    return tot - (wf * wf + wp * wp) / tot;  // W * G
  }
  Scalar leaf_value(const std::vector<std::size_t>& rows) const {
    Scalar wf = 0.0, wt = 0.0;
    for (auto r : rows) {
      const auto k = static_cast<Eigen::Index>(r);
      wt += w[k];
      wf += w[k] * fail[k];
    }
    return wt > 0.0 ? wf / wt : 0.0;
  }
  Scalar total_weight(const std::vector<std::size_t>& rows) const {
    Scalar wt = 0.0;
    for (auto r : rows) wt += w[static_cast<Eigen::Index>(r)];
    return wt;
  }
  bool pure(const std::vector<std::size_t>& rows) const {
    const Scalar first = fail[static_cast<Eigen::Index>(rows.front())];
    return std::all_of(rows.begin(), rows.end(), [&](auto r) { return fail[static_cast<Eigen::Index>(r)] == first; });
  }
  Scalar node_score(const std::vector<std::size_t>& rows) const {
    Scalar wf = 0.0, wp = 0.0;
    for (auto r : rows) {
      const auto k = static_cast<Eigen::Index>(r);
      (fail[k] > 0.5 ? wf : wp) += w[k];
    }
    return -gini_mass(wf, wp);
  }

  struct Acc {
    const Vector& fail;
    const Vector& w;
    Scalar tf, tp, lf = 0.0, lp = 0.0;
    void move_left(std::size_t r) {
      const auto k = static_cast<Eigen::Index>(r);
      (fail[k] > 0.5 ? lf : lp) += w[k];
    }
    Scalar score() const { return -(gini_mass(lf, lp) + gini_mass(tf - lf, tp - lp)); }
  };
  Acc begin(const std::vector<std::size_t>& rows) const {
    Scalar wf = 0.0, wp = 0.0;
    for (auto r : rows) {
      const auto k = static_cast<Eigen::Index>(r);
      (fail[k] > 0.5 ? wf : wp) += w[k];
    }
    return Acc{fail, w, wf, wp};
  }
};

}  // namespace

DecisionTree fit_regression_tree(const Matrix& X, const Vector& y, std::span<const std::size_t> rows,
                                 const TreeParams& params, Rng* rng) {
  if (rows.empty()) raise(ErrorCode::DatasetTooSmall, "regression tree needs at least one row");
  SquaredError crit{y};
  Builder<SquaredError> b(X, crit, params, rng);
  return b.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

DecisionTree fit_regression_tree(const Matrix& X, const Vector& y, const TreeParams& params) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_regression_tree(X, y, rows, params, nullptr);
}

DecisionTree fit_gini_tree(const Matrix& X, const Vector& is_fail, const Vector& sample_weight,
                           const TreeParams& params) {
  if (X.rows() == 0) raise(ErrorCode::DatasetTooSmall, "classification tree needs at least one row");
  WeightedGini crit{is_fail, sample_weight};
  Builder<WeightedGini> b(X, crit, params, nullptr);
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return b.build(std::move(rows));
}

}  // namespace failscope
