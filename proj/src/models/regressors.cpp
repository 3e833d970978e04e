#include <algorithm>
#include <cmath>
#include <numeric>

#include "failscope/models.hpp"

namespace failscope {

namespace {

Scalar hp_or(const Hyperparams& hp, const char* key, Scalar fallback) {
  auto it = hp.find(key);
  return it == hp.end() ? fallback : it->second;
}

}  // namespace

// ----------------------------------------------------------- stump boosting

Scalar StumpBoostRegressor::predict(const Eigen::Ref<const RowVector>& x) const {
  Scalar acc = base;
  for (const auto& s : stumps)
    acc += learning_rate * (x[static_cast<Eigen::Index>(s.feature)] <= s.threshold ? s.left : s.right);
  return acc;
}

nlohmann::json StumpBoostRegressor::summary() const {
  return {{"model", "stump_boost"}, {"stages", stumps.size()}, {"learning_rate", learning_rate}, {"base", base}};
}

StumpBoostRegressor fit_stump_boost(const Matrix& X, const Vector& y, std::size_t n_estimators, Scalar learning_rate) {
  StumpBoostRegressor m;
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  m.learning_rate = learning_rate;
  m.base = y.mean();

  std::vector<std::vector<std::size_t>> order(p, std::vector<std::size_t>(n));
  for (std::size_t f = 0; f < p; ++f) {
    std::iota(order[f].begin(), order[f].end(), std::size_t{0});
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(order[f].begin(), order[f].end(), [&](std::size_t a, std::size_t b) {
      return X(static_cast<Eigen::Index>(a), col) < X(static_cast<Eigen::Index>(b), col);
    });
  }

  Vector residual = y.array() - m.base;
  const Scalar total_n = static_cast<Scalar>(n);
  for (std::size_t stage = 0; stage < n_estimators; ++stage) {
    const Scalar total = residual.sum();
    Scalar best_score = total * total / total_n;
    StumpBoostRegressor::Stump best;
    bool found = false;
    for (std::size_t f = 0; f < p; ++f) {
      const auto col = static_cast<Eigen::Index>(f);
      Scalar left = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left += residual[static_cast<Eigen::Index>(order[f][i])];
        const Scalar xi = X(static_cast<Eigen::Index>(order[f][i]), col);
        const Scalar xn = X(static_cast<Eigen::Index>(order[f][i + 1]), col);
        if (!(xi < xn)) continue;
        const Scalar nl = static_cast<Scalar>(i + 1);
        const Scalar nr = total_n - nl;
        const Scalar score = left * left / nl + (total - left) * (total - left) / nr;
        if (score > best_score + 1e-12 * std::max<Scalar>(1.0, best_score)) {
          best_score = score;
          best = {f, xi + (xn - xi) / 2.0, left / nl, (total - left) / nr};
          found = true;
        }
      }
    }
    if (!found) break;
    m.stumps.push_back(best);
    const auto col = static_cast<Eigen::Index>(best.feature);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      residual[i] -= learning_rate * (X(i, col) <= best.threshold ? best.left : best.right);
  }
  return m;
}

// --------------------------------------------------------------------- mlp

Scalar MlpRegressor::predict(const Eigen::Ref<const RowVector>& x) const {
  const RowVector xs = scaler.transform(x);
  const Vector h = (w1 * xs.transpose() + b1).array().tanh();
  return (h.dot(w2) + b2) * y_scale + y_mean;
}

nlohmann::json MlpRegressor::summary() const {
  return {{"model", "mlp"},
          {"hidden", w1.rows()},
          {"epochs", loss_history.size()},
          {"final_loss", loss_history.empty() ? 0.0 : loss_history.back()}};
}

namespace {

struct MlpParams {
  Matrix w1;
  Vector b1;
  Vector w2;
  Scalar b2 = 0.0;
};

Scalar mlp_loss(const MlpParams& p, const Matrix& X, const Vector& y) {
  const Eigen::MatrixXd H = ((X * p.w1.transpose()).rowwise() + p.b1.transpose()).array().tanh();
  const Vector out = (H * p.w2).array() + p.b2;
  return 0.5 * (out - y).squaredNorm() / static_cast<Scalar>(X.rows());
}

MlpParams mlp_gradient(const MlpParams& p, const Matrix& X, const Vector& y) {
  const auto n = static_cast<Scalar>(X.rows());
  const Eigen::MatrixXd H = ((X * p.w1.transpose()).rowwise() + p.b1.transpose()).array().tanh();
  const Vector d = ((H * p.w2).array() + p.b2 - y.array()).matrix() / n;
  MlpParams g;
  g.w2 = H.transpose() * d;
  g.b2 = d.sum();
  const Eigen::MatrixXd dH = ((d * p.w2.transpose()).array() * (1.0 - H.array().square())).matrix();
  g.w1 = dH.transpose() * X;
  g.b1 = dH.colwise().sum().transpose();
  return g;
}

MlpParams mlp_step(const MlpParams& p, const MlpParams& g, Scalar lr) {
  MlpParams q;
  q.w1 = p.w1 - lr * g.w1;
  q.b1 = p.b1 - lr * g.b1;
  q.w2 = p.w2 - lr * g.w2;
  q.b2 = p.b2 - lr * g.b2;
  return q;
}

}  // namespace

MlpRegressor fit_mlp(const Matrix& X, const Vector& y, const Hyperparams& hp, Rng& rng) {
  MlpRegressor m;
  const auto hidden = static_cast<Eigen::Index>(std::max<Scalar>(1.0, hp_or(hp, "hidden", 16)));
  const auto epochs = static_cast<std::size_t>(hp_or(hp, "epochs", 200));
  Scalar lr = hp_or(hp, "learning_rate", 0.1);
  const auto batch = static_cast<std::size_t>(hp_or(hp, "batch_size", 0));
  const Eigen::Index p = X.cols();

  m.scaler = Scaler::fit(X);
  const Matrix Xs = m.scaler.transform(X);
  m.y_mean = y.mean();
  const Scalar var = (y.array() - m.y_mean).square().mean();
  m.y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Vector ys = (y.array() - m.y_mean) / m.y_scale;

  MlpParams params;
  const Scalar a1 = std::sqrt(6.0 / static_cast<Scalar>(p + hidden));
  const Scalar a2 = std::sqrt(6.0 / static_cast<Scalar>(hidden + 1));
  params.w1.resize(hidden, p);
  for (Eigen::Index i = 0; i < hidden; ++i)
    for (Eigen::Index j = 0; j < p; ++j) params.w1(i, j) = rng.uniform(-a1, a1);
  params.b1 = Vector::Zero(hidden);
  params.w2.resize(hidden);
  for (Eigen::Index i = 0; i < hidden; ++i) params.w2[i] = rng.uniform(-a2, a2);

  const std::size_t n = static_cast<std::size_t>(X.rows());
  Scalar loss = mlp_loss(params, Xs, ys);
  for (std::size_t e = 0; e < epochs; ++e) {
    if (batch == 0 || batch >= n) {
      // Full batch with step halving keeps the loss sequence non-increasing.
      const MlpParams g = mlp_gradient(params, Xs, ys);
      for (int tries = 0; tries < 30; ++tries) {
        MlpParams cand = mlp_step(params, g, lr);
        const Scalar cand_loss = mlp_loss(cand, Xs, ys);
        if (cand_loss <= loss) {
          params = std::move(cand);
          loss = cand_loss;
          break;
        }
        lr *= 0.5;
      }
    } else {
      auto perm = rng.permutation(n);
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t end = std::min(n, start + batch);
        Matrix xb(static_cast<Eigen::Index>(end - start), p);
        Vector yb(static_cast<Eigen::Index>(end - start));
        for (std::size_t k = start; k < end; ++k) {
          xb.row(static_cast<Eigen::Index>(k - start)) = Xs.row(static_cast<Eigen::Index>(perm[k]));
          yb[static_cast<Eigen::Index>(k - start)] = ys[static_cast<Eigen::Index>(perm[k])];
        }
        params = mlp_step(params, mlp_gradient(params, xb, yb), lr);
      }
      loss = mlp_loss(params, Xs, ys);
    }
    m.loss_history.push_back(loss);
  }
  m.w1 = std::move(params.w1);
  m.b1 = std::move(params.b1);
  m.w2 = std::move(params.w2);
  m.b2 = params.b2;
  return m;
}

// ----------------------------------------------------------- random forest

Scalar RandomForestRegressor::predict(const Eigen::Ref<const RowVector>& x) const {
  Scalar acc = 0.0;
  for (const auto& t : trees) acc += t.predict(x);
  return trees.empty() ? 0.0 : acc / static_cast<Scalar>(trees.size());
}

nlohmann::json RandomForestRegressor::summary() const {
  return {{"model", "random_forest"}, {"trees", trees.size()}};
}

RandomForestRegressor fit_random_forest(const Matrix& X, const Vector& y, const Hyperparams& hp, Rng& rng) {
  RandomForestRegressor m;
  const auto n_trees = static_cast<std::size_t>(std::max<Scalar>(1.0, hp_or(hp, "n_trees", 30)));
  TreeParams tp;
  tp.max_depth = static_cast<int>(hp_or(hp, "max_depth", 12));
  tp.min_leaf = static_cast<std::size_t>(hp_or(hp, "min_leaf", 1));
  tp.max_features = hp_or(hp, "max_features", 0.8);
  const auto n = static_cast<std::size_t>(X.rows());
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng tree_rng = rng.split(t);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = tree_rng.below(n);
    m.trees.push_back(fit_regression_tree(X, y, rows, tp, &tree_rng));
  }
  return m;
}

// --------------------------------------------------------------------- svr
// Dual of epsilon-SVR with beta = alpha - alpha*; the bias is absorbed into the
// kernel (k + 1), which removes the equality constraint so each coordinate has
// a closed-form soft-threshold update.

Scalar KernelSvr::predict(const Eigen::Ref<const RowVector>& x) const {
  const RowVector xs = scaler.transform(x);
  Scalar acc = 0.0;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    acc += beta[i] * (std::exp(-gamma * (support.row(i) - xs).squaredNorm()) + 1.0);
  return acc * y_scale + y_mean;
}

nlohmann::json KernelSvr::summary() const {
  return {{"model", "svr_rbf"},
          {"support_vectors", support.rows()},
          {"gamma", gamma},
          {"sweeps", sweeps},
          {"ridge_fallback", ridge_fallback}};
}

KernelSvr fit_svr(const Matrix& X, const Vector& y, const Hyperparams& hp) {
  KernelSvr m;
  const Scalar C = hp_or(hp, "C", 10.0);
  const Scalar eps = hp_or(hp, "epsilon", 0.05);
  const auto max_sweeps = static_cast<std::size_t>(hp_or(hp, "max_sweeps", 200));
  const Scalar tol = hp_or(hp, "tolerance", 1e-5);
  m.gamma = hp_or(hp, "gamma", 1.0) / static_cast<Scalar>(std::max<Eigen::Index>(1, X.cols()));

  m.scaler = Scaler::fit(X);
  const Matrix Xs = m.scaler.transform(X);
  m.y_mean = y.mean();
  const Scalar var = (y.array() - m.y_mean).square().mean();
  m.y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Vector ys = (y.array() - m.y_mean) / m.y_scale;

  const Eigen::Index n = Xs.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 2.0;
    for (Eigen::Index j = 0; j < i; ++j) K(i, j) = K(j, i) = std::exp(-m.gamma * (Xs.row(i) - Xs.row(j)).squaredNorm()) + 1.0;
  }

  Vector beta = Vector::Zero(n);
  Vector Kb = Vector::Zero(n);
  bool converged = false;
  for (m.sweeps = 0; m.sweeps < max_sweeps && !converged; ++m.sweeps) {
    Scalar max_delta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar z = ys[i] - (Kb[i] - K(i, i) * beta[i]);
      const Scalar shrunk = std::abs(z) <= eps ? 0.0 : (z > 0 ? z - eps : z + eps);
      const Scalar b = std::clamp(shrunk / K(i, i), -C, C);
      const Scalar delta = b - beta[i];
      if (delta != 0.0) {
        Kb += delta * K.col(i);
        beta[i] = b;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    converged = max_delta < tol;
  }
  if (!converged) {
    m.ridge_fallback = true;
    beta = (K + (1.0 / C) * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(ys);
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (beta[i] != 0.0) keep.push_back(i);
  m.support.resize(static_cast<Eigen::Index>(keep.size()), Xs.cols());
  m.beta.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    m.support.row(static_cast<Eigen::Index>(k)) = Xs.row(keep[k]);
    m.beta[static_cast<Eigen::Index>(k)] = beta[keep[k]];
  }
  return m;
}

}  // namespace failscope
