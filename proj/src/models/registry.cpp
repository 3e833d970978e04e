#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "failscope/models.hpp"

namespace failscope {

namespace {

constexpr std::array<std::string_view, 9> kNames = {"GL", "GNL", "LSB", "RT", "NN", "RF", "SVR", "ClassTree", "LogReg"};

Scalar hp_or(const Hyperparams& hp, const char* key, Scalar fallback) {
  auto it = hp.find(key);
  return it == hp.end() ? fallback : it->second;
}

Hyperparams with_defaults(ModelType t, const Hyperparams& hp) {
  Hyperparams out = default_hyperparams(t);
  for (const auto& [k, v] : hp) out[k] = v;
  return out;
}

std::vector<Verdict> labels_of(const std::vector<LabeledRow>& rows, std::span<const std::size_t> idx) {
  std::vector<Verdict> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(rows[i].label());
  return out;
}

Matrix rows_of(const Matrix& X, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

Vector fitness_of(const std::vector<LabeledRow>& rows, std::span<const std::size_t> idx) {
  Vector y(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) y[static_cast<Eigen::Index>(k)] = rows[idx[k]].fitness;
  return y;
}

Scalar clip(Scalar v, const std::optional<FitnessBounds>& b) { return b ? std::clamp(v, b->lower, b->upper) : v; }

}  // namespace

std::string_view to_string(ModelType t) { return kNames[static_cast<std::size_t>(t)]; }

ModelType model_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<ModelType>(i);
  raise(ErrorCode::InvalidConfig, "unknown model type '" + std::string(name) + "'");
}

Hyperparams default_hyperparams(ModelType t) {
  switch (t) {
    case ModelType::GL: return {{"ridge", 0.0}};
    case ModelType::GNL: return {{"degree", 2}, {"ridge", 1e-6}};
    case ModelType::LSB: return {{"n_estimators", 100}, {"learning_rate", 0.1}};
    case ModelType::RT: return {{"max_depth", 8}, {"min_leaf", 1}};
    case ModelType::NN: return {{"hidden", 16}, {"epochs", 200}, {"learning_rate", 0.1}, {"batch_size", 0}};
    case ModelType::RF: return {{"n_trees", 30}, {"max_features", 0.8}, {"max_depth", 10}, {"min_leaf", 1}};
    case ModelType::SVR: return {{"C", 10}, {"gamma", 1.0}, {"epsilon", 0.05}, {"max_sweeps", 200}};
    case ModelType::ClassTree: return {{"max_depth", 5}, {"min_leaf", 1}, {"balanced", 1}};
    case ModelType::LogReg: return {{"lambda", 1e-3}, {"max_iters", 2000}, {"tolerance", 1e-6}};
  }
  return {};
}

HyperGrid default_grid(ModelType t) {
  switch (t) {
    case ModelType::GL: return {{"ridge", {0, 1e-4, 1e-2, 1e-1, 1}}};
    case ModelType::GNL: return {{"degree", {2, 3}}, {"ridge", {1e-6, 1e-4, 1e-2, 1e-1}}};
    case ModelType::LSB: return {{"n_estimators", {50, 100, 200}}, {"learning_rate", {0.05, 0.1, 0.2, 0.3}}};
    case ModelType::RT: return {{"max_depth", {2, 3, 4, 5, 6, 7, 8, 9, 10}}, {"min_leaf", {1, 2, 4}}};
    case ModelType::NN: return {{"hidden", {8, 16, 32}}, {"epochs", {100, 200, 400}}, {"learning_rate", {0.05, 0.1, 0.3}}};
    case ModelType::RF: return {{"n_trees", {10, 30, 60}}, {"max_features", {0.5, 0.8, 1.0}}, {"min_leaf", {1, 2, 4}}};
    case ModelType::SVR: return {{"C", {1, 10, 100}}, {"gamma", {0.25, 0.5, 1, 2}}, {"epsilon", {0.01, 0.05, 0.1}}};
    case ModelType::ClassTree: return {{"max_depth", {2, 3, 4, 5, 6, 7, 8}}, {"min_leaf", {1, 2, 5}}};
    case ModelType::LogReg: return {{"lambda", {1e-4, 1e-3, 1e-2, 1e-1}}};
  }
  return {};
}

std::vector<Hyperparams> expand_grid(const HyperGrid& grid) {
  std::vector<Hyperparams> out{Hyperparams{}};
  for (const auto& [key, values] : grid) {
    std::vector<Hyperparams> next;
    for (const auto& partial : out)
      for (auto v : values) {
        Hyperparams h = partial;
        h[key] = v;
        next.push_back(std::move(h));
      }
    out = std::move(next);
  }
  return out;
}

nlohmann::json RegressionTreeModel::summary() const {
  return {{"model", "regression_tree"}, {"leaves", tree.leaf_count()}, {"depth", tree.depth()}};
}

std::unique_ptr<Regressor> fit_regressor(ModelType t, const Matrix& X, const Vector& y, const Hyperparams& given,
                                         Rng& rng) {
  if (X.rows() == 0) raise(ErrorCode::EmptySamples, "cannot fit a regressor on zero rows");
  const Hyperparams hp = with_defaults(t, given);
  switch (t) {
    case ModelType::GL: return std::make_unique<LinearRegressor>(fit_linear(X, y, hp_or(hp, "ridge", 0.0)));
    case ModelType::GNL:
      return std::make_unique<PolynomialRegressor>(
          fit_polynomial(X, y, static_cast<int>(hp_or(hp, "degree", 2)), hp_or(hp, "ridge", 1e-6)));
    case ModelType::LSB:
      return std::make_unique<StumpBoostRegressor>(fit_stump_boost(
          X, y, static_cast<std::size_t>(hp_or(hp, "n_estimators", 100)), hp_or(hp, "learning_rate", 0.1)));
    case ModelType::RT: {
      auto m = std::make_unique<RegressionTreeModel>();
      TreeParams tp;
      tp.max_depth = static_cast<int>(hp_or(hp, "max_depth", 8));
      tp.min_leaf = static_cast<std::size_t>(hp_or(hp, "min_leaf", 1));
      m->tree = fit_regression_tree(X, y, tp);
      return m;
    }
    case ModelType::NN: return std::make_unique<MlpRegressor>(fit_mlp(X, y, hp, rng));
    case ModelType::RF: return std::make_unique<RandomForestRegressor>(fit_random_forest(X, y, hp, rng));
    case ModelType::SVR: return std::make_unique<KernelSvr>(fit_svr(X, y, hp));
    default: break;
  }
  raise(ErrorCode::InvalidConfig, std::string(to_string(t)) + " is not a regression model");
}

Scalar TrainedModel::predict(const TestInput& t) const {
  return std::clamp(regressor->predict(encoder.encode(t)), bounds.lower, bounds.upper);
}

nlohmann::json TrainedModel::summary() const {
  return {{"type", to_string(type)},
          {"holdout_mae", holdout_mae},
          {"hyperparams", hyperparams},
          {"model", regressor ? regressor->summary() : nlohmann::json()}};
}

TrainedModel train(ModelType t, const LabeledDataset& ds, const TrainOptions& opts, Rng& rng) {
  if (!is_regression(t)) raise(ErrorCode::InvalidConfig, std::string(to_string(t)) + " is not a surrogate model");
  if (ds.size() < 10) raise(ErrorCode::DatasetTooSmall, "surrogate training needs at least 10 rows");
  if (!(opts.split > 0.0 && opts.split < 1.0)) raise(ErrorCode::InvalidConfig, "train split must lie in (0, 1)");

  const auto& rows = ds.rows();
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < rows.size(); ++i) by_class[rows[i].label() == Verdict::Fail].push_back(i);
  std::vector<std::size_t> fit_idx, hold_idx;
  Rng split_rng = rng.split("train.split");
  for (auto& cls : by_class) {
    split_rng.shuffle(cls);
    auto n_fit = static_cast<std::size_t>(std::llround(opts.split * static_cast<Scalar>(cls.size())));
    n_fit = std::min(n_fit, cls.size());
    fit_idx.insert(fit_idx.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_fit));
    hold_idx.insert(hold_idx.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_fit), cls.end());
  }
  if (hold_idx.empty()) {
    hold_idx.push_back(fit_idx.back());
    fit_idx.pop_back();
  }
  std::sort(fit_idx.begin(), fit_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());

  TrainedModel m;
  m.type = t;
  m.encoder = Encoder(ds.space());
  m.hyperparams = with_defaults(t, opts.hyperparams);
  if (opts.bounds) m.bounds = *opts.bounds;

  const Matrix X = m.encoder.encode(std::span<const LabeledRow>(rows));
  Rng fit_rng = rng.split("train.fit");
  m.regressor = fit_regressor(t, rows_of(X, fit_idx), fitness_of(rows, fit_idx), m.hyperparams, fit_rng);
  Scalar err = 0.0;
  for (auto i : hold_idx)
    err += std::abs(std::clamp(m.regressor->predict(X.row(static_cast<Eigen::Index>(i))), m.bounds.lower,
                               m.bounds.upper) -
                    rows[i].fitness);
  m.holdout_mae = err / static_cast<Scalar>(hold_idx.size());
  return m;
}

// ---------------------------------------------------------------- tuning

Scalar cross_validated_error(ModelType t, const LabeledDataset& ds, const Hyperparams& given, std::size_t folds,
                             Rng& rng, std::optional<FitnessBounds> bounds) {
  const auto& rows = ds.rows();
  if (rows.size() < 2) raise(ErrorCode::DatasetTooSmall, "cross-validation needs at least 2 rows");
  folds = std::clamp<std::size_t>(folds, 2, rows.size());
  const Hyperparams hp = with_defaults(t, given);
  const Encoder enc(ds.space());
  const Matrix X = enc.encode(std::span<const LabeledRow>(rows));
  const auto perm = rng.split("cv.folds").permutation(rows.size());
  std::vector<std::size_t> fold_of(rows.size());
  for (std::size_t k = 0; k < perm.size(); ++k) fold_of[perm[k]] = k % folds;

  Scalar err = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < rows.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    const Matrix Xtr = rows_of(X, tr);
    if (is_regression(t)) {
      Rng fit_rng = rng.split(f);
      auto model = fit_regressor(t, Xtr, fitness_of(rows, tr), hp, fit_rng);
      for (auto i : te) err += std::abs(clip(model->predict(X.row(static_cast<Eigen::Index>(i))), bounds) - rows[i].fitness);
    } else {
      const auto labels = labels_of(rows, tr);
      const bool single = std::all_of(labels.begin(), labels.end(), [&](Verdict v) { return v == labels.front(); });
      if (single) {
        for (auto i : te) err += rows[i].label() != labels.front();
      } else if (t == ModelType::ClassTree) {
        const auto model = fit_class_tree(enc, Xtr, labels, hp);
        for (auto i : te) err += model.classify_encoded(X.row(static_cast<Eigen::Index>(i))) != rows[i].label();
      } else {
        const auto model = fit_logistic(Xtr, labels, hp);
        for (auto i : te) {
          const Verdict v = model.probability(X.row(static_cast<Eigen::Index>(i))) >= 0.5 ? Verdict::Pass : Verdict::Fail;
          err += v != rows[i].label();
        }
      }
    }
  }
  return err / static_cast<Scalar>(rows.size());
}

namespace {

// Grid position of every candidate, each coordinate scaled to [0, 1].
std::vector<std::vector<Scalar>> grid_coordinates(const HyperGrid& grid, const std::vector<Hyperparams>& cands) {
  std::vector<std::vector<Scalar>> out;
  for (const auto& c : cands) {
    std::vector<Scalar> coord;
    for (const auto& [key, values] : grid) {
      const auto pos = std::find(values.begin(), values.end(), c.at(key)) - values.begin();
      coord.push_back(values.size() > 1 ? static_cast<Scalar>(pos) / static_cast<Scalar>(values.size() - 1) : 0.0);
    }
    out.push_back(std::move(coord));
  }
  return out;
}

Scalar normal_cdf(Scalar z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
Scalar normal_pdf(Scalar z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TuneResult tune(ModelType t, const LabeledDataset& ds, const TuneOptions& opts, Rng& rng) {
  const HyperGrid grid = opts.grid ? *opts.grid : default_grid(t);
  const auto cands = expand_grid(grid);
  const std::size_t trials = std::clamp<std::size_t>(opts.trials, 1, cands.size());
  Rng order_rng = rng.split("tune.order");
  const Rng cv_rng = rng.split("tune.cv");  // same folds for every candidate
  auto score = [&](const Hyperparams& hp) {
    Rng r = cv_rng;
    return cross_validated_error(t, ds, hp, opts.folds, r, opts.bounds);
  };

  TuneResult res;
  res.best_score = std::numeric_limits<Scalar>::infinity();
  auto record = [&](const Hyperparams& hp) {
    const Scalar s = score(hp);
    res.history.emplace_back(hp, s);
    if (s < res.best_score) {
      res.best_score = s;
      res.best = hp;
    }
  };

  const auto perm = order_rng.permutation(cands.size());
  if (opts.tuner == TunerKind::RandomSearch) {
    for (std::size_t k = 0; k < trials; ++k) record(cands[perm[k]]);
  } else {
    const auto coords = grid_coordinates(grid, cands);
    std::set<std::size_t> seen;
    const std::size_t warmup = std::min<std::size_t>(2, trials);
    for (std::size_t k = 0; k < warmup; ++k) {
      seen.insert(perm[k]);
      record(cands[perm[k]]);
    }
    std::vector<std::size_t> evaluated(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(warmup));
    constexpr Scalar bandwidth = 0.25;
    while (res.history.size() < trials) {
      Scalar best_ei = -1.0;
      std::size_t pick = cands.size();
      for (std::size_t k = 0; k < perm.size(); ++k) {
        const std::size_t c = perm[k];
        if (seen.count(c)) continue;
        Scalar wsum = 0.0, mean = 0.0;
        std::vector<Scalar> w(evaluated.size());
        for (std::size_t e = 0; e < evaluated.size(); ++e) {
          Scalar d2 = 0.0;
          for (std::size_t a = 0; a < coords[c].size(); ++a) d2 += std::pow(coords[c][a] - coords[evaluated[e]][a], 2);
          w[e] = std::exp(-0.5 * d2 / (bandwidth * bandwidth));
          wsum += w[e];
          mean += w[e] * res.history[e].second;
        }
        mean /= wsum;
        Scalar var = 0.0;
        for (std::size_t e = 0; e < evaluated.size(); ++e) var += w[e] * std::pow(res.history[e].second - mean, 2);
        // Far from every evaluated point the weights vanish; the 1/wsum term keeps it uncertain.
        const Scalar sd = std::sqrt(var / wsum) + 1.0 / (1.0 + wsum) * std::abs(res.best_score) + 1e-12;
        const Scalar z = (res.best_score - mean) / sd;
        const Scalar ei = (res.best_score - mean) * normal_cdf(z) + sd * normal_pdf(z);
        if (ei > best_ei) {
          best_ei = ei;
          pick = c;
        }
      }
      seen.insert(pick);
      evaluated.push_back(pick);
      record(cands[pick]);
    }
  }
  res.best = with_defaults(t, res.best);
  return res;
}

}  // namespace failscope
