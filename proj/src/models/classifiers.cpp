#include <algorithm>
#include <cmath>

#include "failscope/models.hpp"

namespace failscope {

namespace {

Scalar hp_or(const Hyperparams& hp, const char* key, Scalar fallback) {
  auto it = hp.find(key);
  return it == hp.end() ? fallback : it->second;
}

Scalar sigmoid(Scalar z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
Scalar softplus(Scalar z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

// --------------------------------------------------------- decision tree

Verdict ClassTreeModel::classify_encoded(const Eigen::Ref<const RowVector>& x) const {
  return tree.predict(x) > 0.5 ? Verdict::Fail : Verdict::Pass;
}

nlohmann::json ClassTreeModel::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : encoder.space().variables()) {
    if (v.is_real()) {
      vars.push_back({{"name", v.name()}, {"type", "real"}, {"lower", v.range().lower}, {"upper", v.range().upper}});
    } else {
      vars.push_back({{"name", v.name()}, {"type", "enum"}, {"symbols", v.symbols()}});
    }
  }
  return {{"space", vars}, {"hyperparams", hyperparams}, {"tree", tree.to_json()}};
}

ClassTreeModel ClassTreeModel::from_json(const nlohmann::json& j) {
  std::vector<InputVariable> vars;
  for (const auto& v : j.at("space")) {
    if (v.at("type") == "real") {
      vars.push_back(InputVariable::real(v.at("name"), v.at("lower"), v.at("upper")));
    } else {
      vars.push_back(InputVariable::enumerated(v.at("name"), v.at("symbols").get<std::vector<std::string>>()));
    }
  }
  ClassTreeModel m;
  m.encoder = Encoder(InputSpace(std::move(vars)));
  m.hyperparams = j.at("hyperparams").get<Hyperparams>();
  m.tree = DecisionTree::from_json(j.at("tree"));
  return m;
}

ClassTreeModel fit_class_tree(const Encoder& enc, const Matrix& X, std::span<const Verdict> labels,
                              const Hyperparams& hp) {
  if (labels.empty()) raise(ErrorCode::EmptySamples, "cannot fit a classification tree on zero rows");
  const auto n = static_cast<Eigen::Index>(labels.size());
  Vector is_fail(n);
  std::size_t fails = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    is_fail[i] = labels[static_cast<std::size_t>(i)] == Verdict::Fail ? 1.0 : 0.0;
    fails += labels[static_cast<std::size_t>(i)] == Verdict::Fail;
  }
  const std::size_t passes = labels.size() - fails;

  Scalar w_fail = 1.0;
  Scalar w_pass = 1.0;
  if (auto it = hp.find("fail_weight"); it != hp.end()) {
    w_fail = it->second;
  } else if (hp_or(hp, "balanced", 1.0) != 0.0 && fails > 0 && passes > 0) {
    w_fail = static_cast<Scalar>(labels.size()) / (2.0 * static_cast<Scalar>(fails));
    w_pass = static_cast<Scalar>(labels.size()) / (2.0 * static_cast<Scalar>(passes));
  }
  Vector weights(n);
  for (Eigen::Index i = 0; i < n; ++i) weights[i] = is_fail[i] > 0.5 ? w_fail : w_pass;

  TreeParams tp;
  tp.max_depth = static_cast<int>(hp_or(hp, "max_depth", 5));
  tp.min_leaf = static_cast<std::size_t>(hp_or(hp, "min_leaf", 1));
  ClassTreeModel m;
  m.encoder = enc;
  m.hyperparams = hp;
  m.tree = fit_gini_tree(X, is_fail, weights, tp);
  return m;
}

ClassTreeModel fit_class_tree(const LabeledDataset& ds, const Hyperparams& hp) {
  Encoder enc(ds.space());
  std::vector<Verdict> labels;
  labels.reserve(ds.size());
  for (const auto& r : ds.rows()) labels.push_back(r.label());
  return fit_class_tree(enc, enc.encode(std::span<const LabeledRow>(ds.rows())), labels, hp);
}

// ---------------------------------------------------- logistic regression

Scalar LogisticObjective::value(const Vector& theta) const {
  const Vector w = theta.tail(theta.size() - 1);
  const Vector z = (X * w).array() + theta[0];
  Scalar ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) ll += y[i] * z[i] - softplus(z[i]);
  return ll / static_cast<Scalar>(X.rows()) - 0.5 * lambda * w.squaredNorm();
}

Vector LogisticObjective::gradient(const Vector& theta) const {
  const Vector w = theta.tail(theta.size() - 1);
  const Vector z = (X * w).array() + theta[0];
  Vector r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = y[i] - sigmoid(z[i]);
  const auto n = static_cast<Scalar>(X.rows());
  Vector g(theta.size());
  g[0] = r.sum() / n;
  g.tail(w.size()) = X.transpose() * r / n - lambda * w;
  return g;
}

Scalar LogisticModel::probability(const Eigen::Ref<const RowVector>& x) const { return sigmoid(logit(x)); }

LogisticModel fit_logistic(const Matrix& X, std::span<const Verdict> labels, const Hyperparams& hp) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0 || n != X.rows()) raise(ErrorCode::EmptySamples, "logistic regression needs one label per row");
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] == Verdict::Pass ? 1.0 : 0.0;
  if (y.sum() == 0.0 || y.sum() == static_cast<Scalar>(n))
    raise(ErrorCode::SingleClass, "logistic regression needs both pass and fail rows");

  LogisticModel m;
  m.lambda = hp_or(hp, "lambda", 1e-3);
  const auto max_iters = static_cast<std::size_t>(hp_or(hp, "max_iters", 2000));
  const Scalar tol = hp_or(hp, "tolerance", 1e-6);

  m.scaler = Scaler::fit(X);
  const Matrix Xs = m.scaler.transform(X);
  const LogisticObjective obj{Xs, y, m.lambda};

  // Lipschitz constant of the gradient bounds the safe step.
  Eigen::MatrixXd design(n, Xs.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(Xs.cols()) = Xs;
  const Eigen::MatrixXd gram = design.transpose() * design / static_cast<Scalar>(n);
  const Scalar top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const Scalar step = 1.0 / (0.25 * top + m.lambda);

  Vector theta = Vector::Zero(Xs.cols() + 1);
  for (m.iterations = 0; m.iterations < max_iters; ++m.iterations) {
    const Vector g = obj.gradient(theta);
    theta += step * g;
    m.loss_history.push_back(-obj.value(theta));
    if (g.norm() < tol) {
      m.converged = true;
      ++m.iterations;
      break;
    }
  }
  m.theta_std = theta;
  m.coef = (theta.tail(Xs.cols()).array() / m.scaler.scale.transpose().array()).matrix();
  m.intercept = theta[0] - m.scaler.mean.dot(m.coef.transpose());
  return m;
}

}  // namespace failscope
