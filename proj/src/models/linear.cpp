#include <cmath>

#include "failscope/models.hpp"

namespace failscope {

// ---------------------------------------------------------------- encoding

Encoder::Encoder(const InputSpace& space) : space_(space) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space[i].is_real()) {
      columns_.push_back({i, -1});
    } else {
      for (std::size_t s = 0; s < space[i].symbols().size(); ++s) columns_.push_back({i, static_cast<int>(s)});
    }
  }
}

RowVector Encoder::encode(const TestInput& t) const {
  if (static_cast<std::size_t>(t.size()) != space_.size())
    raise(ErrorCode::SpaceMismatch, "input arity " + std::to_string(t.size()) + " does not match the model space");
  RowVector x(static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Scalar v = t[static_cast<Eigen::Index>(columns_[c].variable)];
    x[static_cast<Eigen::Index>(c)] = columns_[c].symbol < 0 ? v : (v == columns_[c].symbol ? 1.0 : 0.0);
  }
  return x;
}

Matrix Encoder::encode(std::span<const TestInput> inputs) const {
  Matrix X(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = encode(inputs[i]);
  return X;
}

Matrix Encoder::encode(std::span<const LabeledRow> rows) const {
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = encode(rows[i].input);
  return X;
}

Scaler Scaler::fit(const Matrix& X) {
  Scaler s;
  const auto n = static_cast<Scalar>(std::max<Eigen::Index>(1, X.rows()));
  s.mean = X.colwise().sum() / n;
  s.scale = RowVector::Ones(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const Scalar var = (X.col(c).array() - s.mean[c]).square().sum() / n;
    if (var > 1e-24) s.scale[c] = std::sqrt(var);
  }
  return s;
}

Matrix Scaler::transform(const Matrix& X) const {
  return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

RowVector Scaler::transform(const Eigen::Ref<const RowVector>& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

Vector Regressor::predict_all(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict(X.row(i));
  return out;
}

// ------------------------------------------------------------------ linear

LinearRegressor fit_linear(const Matrix& X, const Vector& y, Scalar ridge) {
  LinearRegressor m;
  const auto n = static_cast<Scalar>(X.rows());
  const RowVector x_mean = X.colwise().sum() / n;
  const Scalar y_mean = y.sum() / n;
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;

  if (X.cols() == 0) {
    m.coef = Vector::Zero(0);
    m.intercept = y_mean;
    return m;
  }

  bool solved = false;
  if (ridge <= 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
    if (qr.rank() == Xc.cols()) {
      m.coef = qr.solve(yc);
      solved = true;
    } else {
      m.ridge_fallback = true;
    }
  }
  if (!solved) {
    const Eigen::MatrixXd gram = Xc.transpose() * Xc;
    Scalar lambda = ridge;
    if (lambda <= 0.0) lambda = 1e-8 * std::max<Scalar>(1.0, gram.trace() / static_cast<Scalar>(gram.cols()));
    const Eigen::MatrixXd A = gram + lambda * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    m.coef = A.ldlt().solve(Xc.transpose() * yc);
  }
  m.intercept = y_mean - x_mean.dot(m.coef.transpose());
  return m;
}

nlohmann::json LinearRegressor::summary() const {
  return {{"model", "linear"},
          {"intercept", intercept},
          {"coefficients", std::vector<Scalar>(coef.data(), coef.data() + coef.size())},
          {"ridge_fallback", ridge_fallback}};
}

// -------------------------------------------------------------- polynomial

namespace {

void monomials_of(std::size_t p, int degree, std::size_t start, std::vector<std::size_t>& cur,
                  std::vector<std::vector<std::size_t>>& out) {
  if (!cur.empty()) out.push_back(cur);
  if (static_cast<int>(cur.size()) == degree) return;
  for (std::size_t j = start; j < p; ++j) {
    cur.push_back(j);
    monomials_of(p, degree, j, cur, out);
    cur.pop_back();
  }
}

}  // namespace

Matrix PolynomialRegressor::expand(const Matrix& Xs) const {
  Matrix out(Xs.rows(), static_cast<Eigen::Index>(monomials.size()));
  for (std::size_t k = 0; k < monomials.size(); ++k) {
    Vector col = Vector::Ones(Xs.rows());
    for (auto j : monomials[k]) col.array() *= Xs.col(static_cast<Eigen::Index>(j)).array();
    out.col(static_cast<Eigen::Index>(k)) = col;
  }
  return out;
}

Scalar PolynomialRegressor::predict(const Eigen::Ref<const RowVector>& x) const {
  const RowVector xs = scaler.transform(x);
  Scalar acc = linear.intercept;
  for (std::size_t k = 0; k < monomials.size(); ++k) {
    Scalar term = linear.coef[static_cast<Eigen::Index>(k)];
    for (auto j : monomials[k]) term *= xs[static_cast<Eigen::Index>(j)];
    acc += term;
  }
  return acc;
}

nlohmann::json PolynomialRegressor::summary() const {
  return {{"model", "polynomial"}, {"degree", degree}, {"terms", monomials.size()}};
}

PolynomialRegressor fit_polynomial(const Matrix& X, const Vector& y, int degree, Scalar ridge) {
  PolynomialRegressor m;
  m.degree = std::max(1, degree);
  m.scaler = Scaler::fit(X);
  std::vector<std::size_t> cur;
  monomials_of(static_cast<std::size_t>(X.cols()), m.degree, 0, cur, m.monomials);
  const Matrix Z = m.expand(m.scaler.transform(X));
  m.linear = fit_linear(Z, y, ridge);
  return m;
}

}  // namespace failscope
