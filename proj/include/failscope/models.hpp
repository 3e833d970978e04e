#pragma once

#include <array>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"
#include "failscope/rng.hpp"
#include "failscope/trees.hpp"

namespace failscope {

// Model registry.
//
// Regression surrogates:
//   GL   linear least squares; rank-deficient designs fall back to a ridge solve
//   GNL  polynomial (degree 2 by default) least squares on standardised inputs
//   LSB  least-squares boosting of depth-1 regression stumps
//   RT   CART regression tree (squared error)
//   NN   one-hidden-layer tanh perceptron, gradient descent with step backtracking
//   RF   bagged regression trees with per-split column subsampling
//   SVR  epsilon-insensitive RBF support vector regression, dual coordinate
//        descent; kernel ridge regression when the solver does not converge
// Classifiers:
//   ClassTree  weighted-Gini decision tree
//   LogReg     L2-regularised logistic regression, gradient ascent
enum class ModelType { GL, GNL, LSB, RT, NN, RF, SVR, ClassTree, LogReg };

inline constexpr std::array<ModelType, 7> kSurrogateTypes = {ModelType::GL, ModelType::GNL, ModelType::LSB,
                                                             ModelType::RT, ModelType::NN,  ModelType::RF,
                                                             ModelType::SVR};

std::string_view to_string(ModelType t);
ModelType model_type_from_string(std::string_view name);
constexpr bool is_regression(ModelType t) noexcept {
  return t != ModelType::ClassTree && t != ModelType::LogReg;
}

using Hyperparams = std::map<std::string, Scalar>;
using HyperGrid = std::map<std::string, std::vector<Scalar>>;

Hyperparams default_hyperparams(ModelType t);
HyperGrid default_grid(ModelType t);
/// Cartesian product of a grid in key order.
std::vector<Hyperparams> expand_grid(const HyperGrid& grid);

/// Numeric encoding of an input space: reals pass through unchanged,
/// enumerated variables become one-hot columns.
class Encoder {
 public:
  struct Column {
    std::size_t variable = 0;
    int symbol = -1;  // -1 for a real column
  };

  Encoder() = default;
  explicit Encoder(const InputSpace& space);

  const InputSpace& space() const noexcept { return space_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::size_t width() const noexcept { return columns_.size(); }

  RowVector encode(const TestInput& t) const;
  Matrix encode(std::span<const TestInput> inputs) const;
  Matrix encode(std::span<const LabeledRow> rows) const;

 private:
  InputSpace space_;
  std::vector<Column> columns_;
};

/// Per-column standardisation; zero-variance columns keep unit scale.
struct Scaler {
  RowVector mean;
  RowVector scale;

  static Scaler fit(const Matrix& X);
  Matrix transform(const Matrix& X) const;
  RowVector transform(const Eigen::Ref<const RowVector>& x) const;
};

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Scalar predict(const Eigen::Ref<const RowVector>& x) const = 0;
  virtual nlohmann::json summary() const = 0;
  Vector predict_all(const Matrix& X) const;
};

class LinearRegressor final : public Regressor {
 public:
  Scalar intercept = 0.0;
  Vector coef;
  bool ridge_fallback = false;

  Scalar predict(const Eigen::Ref<const RowVector>& x) const override { return intercept + x.dot(coef.transpose()); }
  nlohmann::json summary() const override;
};

/// Least squares with unpenalised intercept. `ridge` = 0 solves exactly and
/// falls back to a small ridge term when the design is rank deficient.
LinearRegressor fit_linear(const Matrix& X, const Vector& y, Scalar ridge = 0.0);

class PolynomialRegressor final : public Regressor {
 public:
  Scaler scaler;
  int degree = 2;
  std::vector<std::vector<std::size_t>> monomials;  // column multisets
  LinearRegressor linear;

  Matrix expand(const Matrix& Xs) const;
  Scalar predict(const Eigen::Ref<const RowVector>& x) const override;
  nlohmann::json summary() const override;
};
PolynomialRegressor fit_polynomial(const Matrix& X, const Vector& y, int degree, Scalar ridge);

class StumpBoostRegressor final : public Regressor {
 public:
  struct Stump {
    std::size_t feature = 0;
    Scalar threshold = 0.0;
    Scalar left = 0.0;
    Scalar right = 0.0;
  };
  Scalar base = 0.0;
  Scalar learning_rate = 0.1;
  std::vector<Stump> stumps;

  Scalar predict(const Eigen::Ref<const RowVector>& x) const override;
  nlohmann::json summary() const override;
};
StumpBoostRegressor fit_stump_boost(const Matrix& X, const Vector& y, std::size_t n_estimators, Scalar learning_rate);

class RegressionTreeModel final : public Regressor {
 public:
  DecisionTree tree;

  Scalar predict(const Eigen::Ref<const RowVector>& x) const override { return tree.predict(x); }
  nlohmann::json summary() const override;
};

class MlpRegressor final : public Regressor {
 public:
  Scaler scaler;
  Scalar y_mean = 0.0;
  Scalar y_scale = 1.0;
  Matrix w1;  // hidden x inputs
  Vector b1;
  Vector w2;
  Scalar b2 = 0.0;
  std::vector<Scalar> loss_history;  // full-batch loss after each epoch

  Scalar predict(const Eigen::Ref<const RowVector>& x) const override;
  nlohmann::json summary() const override;
};
MlpRegressor fit_mlp(const Matrix& X, const Vector& y, const Hyperparams& hp, Rng& rng);

class RandomForestRegressor final : public Regressor {
 public:
  std::vector<DecisionTree> trees;

  Scalar predict(const Eigen::Ref<const RowVector>& x) const override;
  nlohmann::json summary() const override;
};
RandomForestRegressor fit_random_forest(const Matrix& X, const Vector& y, const Hyperparams& hp, Rng& rng);

class KernelSvr final : public Regressor {
 public:
  Scaler scaler;
  Scalar y_mean = 0.0;
  Scalar y_scale = 1.0;
  Scalar gamma = 1.0;
  Matrix support;  // standardised training inputs with non-zero weight
  Vector beta;
  bool ridge_fallback = false;
  std::size_t sweeps = 0;

  Scalar predict(const Eigen::Ref<const RowVector>& x) const override;
  nlohmann::json summary() const override;
};
KernelSvr fit_svr(const Matrix& X, const Vector& y, const Hyperparams& hp);

std::unique_ptr<Regressor> fit_regressor(ModelType t, const Matrix& X, const Vector& y, const Hyperparams& hp,
                                         Rng& rng);

/// A surrogate trained on a dataset together with its holdout error.
struct TrainedModel {
  ModelType type = ModelType::GL;
  std::shared_ptr<const Regressor> regressor;
  Encoder encoder;
  Scalar holdout_mae = 0.0;
  Hyperparams hyperparams;
  FitnessBounds bounds{-std::numeric_limits<Scalar>::infinity(), std::numeric_limits<Scalar>::infinity()};

  /// Prediction clipped to the declared fitness range. Throws SpaceMismatch.
  Scalar predict(const TestInput& t) const;
  nlohmann::json summary() const;
};

struct TrainOptions {
  Scalar split = 0.8;
  Hyperparams hyperparams;  // empty: registry defaults
  std::optional<FitnessBounds> bounds;
};

/// Fits on a verdict-stratified `split` fraction and reports MAE on the rest.
TrainedModel train(ModelType t, const LabeledDataset& ds, const TrainOptions& opts, Rng& rng);

// ------------------------------------------------------------ classifiers

class ClassTreeModel {
 public:
  DecisionTree tree;
  Encoder encoder;
  Hyperparams hyperparams;

  Verdict classify_encoded(const Eigen::Ref<const RowVector>& x) const;
  Verdict classify(const TestInput& t) const { return classify_encoded(encoder.encode(t)); }

  nlohmann::json to_json() const;
  static ClassTreeModel from_json(const nlohmann::json& j);
};

/// Hyperparameters: max_depth, min_leaf, balanced (1 = inverse class
/// frequency weights), fail_weight (explicit fail-class weight, overrides balanced).
ClassTreeModel fit_class_tree(const Encoder& enc, const Matrix& X, std::span<const Verdict> labels,
                              const Hyperparams& hp);
ClassTreeModel fit_class_tree(const LabeledDataset& ds, const Hyperparams& hp);

/// Mean log-likelihood of pass labels minus (lambda/2)|w|^2 (intercept
/// unpenalised). theta = [intercept, w...].
struct LogisticObjective {
  const Matrix& X;
  const Vector& y;  // 1 = pass
  Scalar lambda = 0.0;

  Scalar value(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
};

struct LogisticModel {
  Scalar intercept = 0.0;  // raw input units
  Vector coef;
  Scaler scaler;
  Vector theta_std;  // [intercept, w...] on standardised inputs
  Scalar lambda = 0.0;
  std::vector<Scalar> loss_history;  // negative objective per iteration
  std::size_t iterations = 0;
  bool converged = false;

  /// Probability of the pass class.
  Scalar probability(const Eigen::Ref<const RowVector>& x) const;
  Scalar logit(const Eigen::Ref<const RowVector>& x) const { return intercept + x.dot(coef.transpose()); }
};

/// Hyperparameters: lambda, max_iters, tolerance. Throws SingleClass.
LogisticModel fit_logistic(const Matrix& X, std::span<const Verdict> labels, const Hyperparams& hp);

// ---------------------------------------------------------------- tuning

enum class TunerKind { RandomSearch, ExpectedImprovement };

struct TuneOptions {
  std::size_t trials = 8;
  std::size_t folds = 3;
  TunerKind tuner = TunerKind::RandomSearch;
  std::optional<HyperGrid> grid;
  std::optional<FitnessBounds> bounds;
};

struct TuneResult {
  Hyperparams best;
  Scalar best_score = 0.0;
  std::vector<std::pair<Hyperparams, Scalar>> history;
};

/// k-fold CV error: MAE for regressors, misclassification rate for classifiers.
Scalar cross_validated_error(ModelType t, const LabeledDataset& ds, const Hyperparams& hp, std::size_t folds,
                             Rng& rng, std::optional<FitnessBounds> bounds = std::nullopt);

TuneResult tune(ModelType t, const LabeledDataset& ds, const TuneOptions& opts, Rng& rng);

}  // namespace failscope
