#include "drsae/nuisance.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>

#include "drsae/csv.hpp"
#include "drsae/error.hpp"

namespace drsae {

namespace {

// log(1 + exp(eta)) without overflow.
double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  double ex = std::exp(eta);
  return ex / (1.0 + ex);
}

// Solves H d = g for a symmetric positive (semi)definite H, adding a small
// ridge when the Cholesky factorization fails.
Vector newton_direction(Matrix H, const Vector& g) {
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() == Eigen::Success) return llt.solve(g);
  H.diagonal().array() += 1e-6;
  llt.compute(H);
  if (llt.info() == Eigen::Success) return llt.solve(g);
  return H.completeOrthogonalDecomposition().solve(g);
}

struct NewtonResult {
  bool converged = false;
  bool saturated = false;
};

// Generic damped Newton ascent. `eval` fills objective, gradient and the
// negative Hessian at a parameter vector and reports whether the linear
// predictor saturated (|eta| large enough that fitted probabilities are 0/1).
template <typename Eval, typename Objective>
NewtonResult newton_ascent(Vector& theta, const FitOptions& opts, double n, Eval&& eval, Objective&& objective,
                           std::vector<double>& trace, int& iterations) {
  NewtonResult res;
  Vector g;
  Matrix H;
  double obj = 0.0;
  for (iterations = 0; iterations < opts.max_iter; ++iterations) {
    bool sat = eval(theta, obj, g, H);
    if (sat) {
      res.saturated = true;
      return res;
    }
    if (!std::isfinite(obj)) return res;
    Vector d = newton_direction(H, g);
    if (d.cwiseAbs().maxCoeff() < opts.step_tol) {
      res.converged = g.cwiseAbs().maxCoeff() <= opts.grad_tol_per_n * std::max(n, 1.0);
      return res;
    }
    double t = 1.0;
    double next = objective(theta + d);
    while (!(next >= obj - 1e-12 * std::fabs(obj)) && t > 1e-12) {
      t *= 0.5;
      next = objective(theta + t * d);
    }
    if (!(next >= obj - 1e-12 * std::fabs(obj))) {
      // No ascent possible along the Newton direction: at numerical optimum.
      res.converged = g.cwiseAbs().maxCoeff() <= opts.grad_tol_per_n * std::max(n, 1.0);
      return res;
    }
    theta += t * d;
    trace.push_back(next);
    if ((t * d).cwiseAbs().maxCoeff() < opts.step_tol) {
      eval(theta, obj, g, H);
      res.converged = g.cwiseAbs().maxCoeff() <= opts.grad_tol_per_n * std::max(n, 1.0);
      return res;
    }
  }
  return res;
}

constexpr double kSaturation = 35.0;

}  // namespace

// ---------------------------------------------------------------------------
// OLS

LinearModel ols_fit(const Matrix& design, const Vector& response, bool ridge_fallback) {
  if (design.rows() != response.size()) throw InputError("ols_fit: design/response size mismatch");
  if (design.rows() == 0) throw InputError("ols_fit: no rows");
  LinearModel m;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (design.rows() >= design.cols() && qr.rank() == design.cols()) {
    m.coef = qr.solve(response);
    return m;
  }
  if (!ridge_fallback) {
    throw SingularDesignError("ols_fit: design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                              std::to_string(design.cols()) + ")");
  }
  Matrix xtx = design.transpose() * design;
  double scale = std::max(1.0, xtx.diagonal().mean());
  xtx.diagonal().array() += 1e-8 * scale;
  m.coef = xtx.ldlt().solve(design.transpose() * response);
  m.ridge_used = true;
  return m;
}

// ---------------------------------------------------------------------------
// Logistic regression

Vector LogitModel::predict(const Matrix& design) const {
  Vector eta = design * coef;
  return eta.unaryExpr([](double v) { return sigmoid(v); });
}

double logistic_loglik(const Matrix& design, const Vector& response, const Vector& coef) {
  Vector eta = design * coef;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += response(i) * eta(i) - softplus(eta(i));
  return ll;
}

Vector logistic_gradient(const Matrix& design, const Vector& response, const Vector& coef) {
  Vector eta = design * coef;
  Vector resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = response(i) - sigmoid(eta(i));
  return design.transpose() * resid;
}

namespace {

LogitModel logistic_attempt(const Matrix& X, const Vector& y, double lambda, const FitOptions& opts,
                            NewtonResult& res) {
  const auto p = X.cols();
  LogitModel m;
  m.coef = Vector::Zero(p);
  auto objective = [&](const Vector& b) { return logistic_loglik(X, y, b) - 0.5 * lambda * b.squaredNorm(); };
  auto eval = [&](const Vector& b, double& obj, Vector& g, Matrix& H) {
    Vector eta = X * b;
    Vector mu(eta.size()), w(eta.size());
    double ll = 0.0;
    bool sat = false;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      if (std::fabs(eta(i)) > kSaturation) sat = true;
      mu(i) = sigmoid(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
      ll += y(i) * eta(i) - softplus(eta(i));
    }
    obj = ll - 0.5 * lambda * b.squaredNorm();
    g = X.transpose() * (y - mu) - lambda * b;
    H = X.transpose() * w.asDiagonal() * X;
    H.diagonal().array() += lambda;
    return sat && lambda == 0.0;
  };
  res = newton_ascent(m.coef, opts, static_cast<double>(X.rows()), eval, objective, m.loglik_trace, m.iterations);
  m.ridge_used = lambda > 0.0;
  return m;
}

}  // namespace

LogitModel logistic_fit(const Matrix& design, const Vector& response, const FitOptions& opts) {
  if (design.rows() != response.size()) throw InputError("logistic_fit: design/response size mismatch");
  double ones = 0.0;
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    if (response(i) != 0.0 && response(i) != 1.0) throw InputError("logistic_fit: response must be 0/1");
    ones += response(i);
  }
  if (ones == 0.0 || ones == static_cast<double>(response.size())) {
    throw InputError("logistic_fit: response has a single class");
  }
  NewtonResult res;
  auto m = logistic_attempt(design, response, 0.0, opts, res);
  if (res.converged) return m;
  if (!opts.allow_ridge) throw ConvergenceError("logistic_fit: Newton iterations did not converge");
  auto r = logistic_attempt(design, response, opts.ridge, opts, res);
  if (!res.converged) throw ConvergenceError("logistic_fit: ridge-regularized fit did not converge");
  return r;
}

// ---------------------------------------------------------------------------
// Multinomial logit

Matrix MultinomialModel::predict(const Matrix& design) const {
  const auto n = design.rows();
  Matrix probs(n, classes);
  if (classes == 1) {
    probs.setOnes();
    return probs;
  }
  Matrix eta = design * coef.transpose();  // n x (J-1)
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = std::max(0.0, eta.row(i).maxCoeff());
    double denom = std::exp(-mx);
    probs(i, 0) = denom;
    for (int a = 1; a < classes; ++a) {
      probs(i, a) = std::exp(eta(i, a - 1) - mx);
      denom += probs(i, a);
    }
    probs.row(i) /= denom;
  }
  return probs;
}

namespace {

void check_labels(std::span<const int> labels, int classes, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) throw InputError("multinomial: label/design size mismatch");
  if (classes < 1) throw InputError("multinomial: class count must be positive");
  for (int l : labels) {
    if (l < 1 || l > classes) throw InputError("multinomial: label out of range");
  }
}

// Log-likelihood and probabilities at `coef`; reports saturation.
double multinomial_eval(const Matrix& X, std::span<const int> labels, int classes, const Matrix& coef, Matrix& probs,
                        bool& saturated) {
  const auto n = X.rows();
  probs.resize(n, classes);
  Matrix eta = X * coef.transpose();
  double ll = 0.0;
  saturated = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = std::max(0.0, eta.row(i).maxCoeff());
    double mn = std::min(0.0, eta.row(i).minCoeff());
    if (mx - mn > 2.0 * kSaturation) saturated = true;
    double denom = std::exp(-mx);
    probs(i, 0) = denom;
    for (int a = 1; a < classes; ++a) {
      probs(i, a) = std::exp(eta(i, a - 1) - mx);
      denom += probs(i, a);
    }
    probs.row(i) /= denom;
    int l = labels[static_cast<std::size_t>(i)];
    double num = l == 1 ? 0.0 : eta(i, l - 2);
    ll += num - (mx + std::log(denom));
  }
  return ll;
}

Matrix multinomial_score(const Matrix& X, std::span<const int> labels, const Matrix& probs) {
  const int classes = static_cast<int>(probs.cols());
  Matrix resid = -probs.rightCols(classes - 1);  // n x (J-1)
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int l = labels[static_cast<std::size_t>(i)];
    if (l > 1) resid(i, l - 2) += 1.0;
  }
  return resid.transpose() * X;  // (J-1) x p
}

Vector flatten(const Matrix& coef) {
  // class-major: row a of coef occupies [a*p, (a+1)*p)
  Vector v(coef.size());
  for (Eigen::Index a = 0; a < coef.rows(); ++a) v.segment(a * coef.cols(), coef.cols()) = coef.row(a).transpose();
  return v;
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index a = 0; a < rows; ++a) m.row(a) = v.segment(a * cols, cols).transpose();
  return m;
}

}  // namespace

double multinomial_loglik(const Matrix& design, std::span<const int> labels, int classes, const Matrix& coef) {
  check_labels(labels, classes, design.rows());
  Matrix probs;
  bool sat = false;
  return multinomial_eval(design, labels, classes, coef, probs, sat);
}

Matrix multinomial_gradient(const Matrix& design, std::span<const int> labels, int classes, const Matrix& coef) {
  check_labels(labels, classes, design.rows());
  Matrix probs;
  bool sat = false;
  multinomial_eval(design, labels, classes, coef, probs, sat);
  return multinomial_score(design, labels, probs);
}

Matrix multinomial_information_serial(const Matrix& design, const Matrix& probs) {
  const auto p = design.cols();
  const auto m = probs.cols() - 1;
  Matrix H = Matrix::Zero(m * p, m * p);
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        double c = probs(i, a + 1) * ((a == b ? 1.0 : 0.0) - probs(i, b + 1));
        for (Eigen::Index k = 0; k < p; ++k) {
          for (Eigen::Index l = 0; l < p; ++l) H(a * p + k, b * p + l) += c * design(i, k) * design(i, l);
        }
      }
    }
  }
  return H;
}

Matrix multinomial_information(const Matrix& design, const Matrix& probs) {
  const auto n = design.rows();
  const auto p = design.cols();
  const auto m = probs.cols() - 1;
  const auto q = p * (p + 1) / 2;  // unique outer-product entries
  const auto pairs = m * (m + 1) / 2;
  Matrix H = Matrix::Zero(m * p, m * p);
  if (m == 0 || n == 0) return H;

  constexpr Eigen::Index kBlock = 512;
  const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
  std::vector<Matrix> partial(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index lo = blk * kBlock;
    const Eigen::Index rows = std::min(kBlock, n - lo);
    Matrix outer(rows, q);
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index c = 0;
      for (Eigen::Index k = 0; k < p; ++k) {
        for (Eigen::Index l = k; l < p; ++l) outer(i, c++) = design(lo + i, k) * design(lo + i, l);
      }
    }
    Matrix weights(rows, pairs);
    Eigen::Index col = 0;
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = a; b < m; ++b, ++col) {
        if (a == b) {
          weights.col(col) = probs.block(lo, a + 1, rows, 1).array() * (1.0 - probs.block(lo, a + 1, rows, 1).array());
        } else {
          weights.col(col) = -probs.block(lo, a + 1, rows, 1).array() * probs.block(lo, b + 1, rows, 1).array();
        }
      }
    }
    partial[static_cast<std::size_t>(blk)].noalias() = outer.transpose() * weights;  // q x pairs
  }

  Matrix acc = Matrix::Zero(q, pairs);
  for (const auto& part : partial) acc += part;  // fixed order: thread-count independent

  Eigen::Index col = 0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b, ++col) {
      Eigen::Index c = 0;
      for (Eigen::Index k = 0; k < p; ++k) {
        for (Eigen::Index l = k; l < p; ++l, ++c) {
          double v = acc(c, col);
          H(a * p + k, b * p + l) = v;
          H(a * p + l, b * p + k) = v;
          H(b * p + k, a * p + l) = v;
          H(b * p + l, a * p + k) = v;
        }
      }
    }
  }
  return H;
}

namespace {

MultinomialModel multinomial_attempt(const Matrix& X, std::span<const int> labels, int classes, double lambda,
                                     const FitOptions& opts, NewtonResult& res) {
  const auto p = X.cols();
  const Eigen::Index m = classes - 1;
  MultinomialModel model;
  model.classes = classes;
  Vector theta = Vector::Zero(m * p);
  Matrix probs;
  auto objective = [&](const Vector& th) {
    bool sat = false;
    Matrix pr;
    return multinomial_eval(X, labels, classes, unflatten(th, m, p), pr, sat) - 0.5 * lambda * th.squaredNorm();
  };
  auto eval = [&](const Vector& th, double& obj, Vector& g, Matrix& H) {
    bool sat = false;
    Matrix coef = unflatten(th, m, p);
    obj = multinomial_eval(X, labels, classes, coef, probs, sat) - 0.5 * lambda * th.squaredNorm();
    g = flatten(multinomial_score(X, labels, probs)) - lambda * th;
    H = multinomial_information(X, probs);
    H.diagonal().array() += lambda;
    return sat && lambda == 0.0;
  };
  res = newton_ascent(theta, opts, static_cast<double>(X.rows()), eval, objective, model.loglik_trace,
                      model.iterations);
  model.coef = unflatten(theta, m, p);
  model.ridge_used = lambda > 0.0;
  return model;
}

}  // namespace

MultinomialModel multinomial_fit(const Matrix& design, std::span<const int> labels, int classes,
                                 const FitOptions& opts) {
  check_labels(labels, classes, design.rows());
  if (classes == 1) {
    MultinomialModel m;
    m.classes = 1;
    m.coef = Matrix::Zero(0, design.cols());
    return m;
  }
  std::vector<int> seen(static_cast<std::size_t>(classes), 0);
  for (int l : labels) seen[static_cast<std::size_t>(l - 1)] = 1;
  const bool missing = std::find(seen.begin(), seen.end(), 0) != seen.end();

  // Loose score tolerance for this model (1e-6 * n).
  FitOptions mopts = opts;
  mopts.grad_tol_per_n = std::max(opts.grad_tol_per_n, 1e-6);

  NewtonResult res;
  if (!missing) {
    auto m = multinomial_attempt(design, labels, classes, 0.0, mopts, res);
    if (res.converged) return m;
    if (!opts.allow_ridge) throw ConvergenceError("multinomial_fit: Newton iterations did not converge");
  } else if (!opts.allow_ridge) {
    throw InputError("multinomial_fit: a class is absent from the training data");
  }
  auto m = multinomial_attempt(design, labels, classes, opts.ridge, mopts, res);
  if (!res.converged) throw ConvergenceError("multinomial_fit: ridge-regularized fit did not converge");
  m.missing_class = missing;
  return m;
}

// ---------------------------------------------------------------------------
// Folds and cross-fitting

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment make_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("make_folds: need at least 2 folds");
  if (static_cast<std::size_t>(k) > n) {
    throw InputError("make_folds: more folds (" + std::to_string(k) + ") than records (" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  f.fold_of.resize(n);
  for (std::size_t r = 0; r < n; ++r) f.fold_of[perm[r]] = static_cast<int>(r % static_cast<std::size_t>(k)) + 1;
  return f;
}

Matrix design_matrix(const SurveyDataset& data, std::span<const std::size_t> rows) {
  const auto p = static_cast<Eigen::Index>(1 + data.dim_x() + data.dim_z());
  Matrix X(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& rec = data[rows[r]];
    auto i = static_cast<Eigen::Index>(r);
    X(i, 0) = 1.0;
    Eigen::Index c = 1;
    for (double v : rec.x) X(i, c++) = v;
    for (double v : rec.z) X(i, c++) = v;
  }
  return X;
}

Matrix design_matrix(const SurveyDataset& data) {
  std::vector<std::size_t> all(data.n());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return design_matrix(data, all);
}

void clip_and_normalize(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, double clip) {
  for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = std::clamp(row(j), clip, 1.0 - clip);
  row /= row.sum();
}

NuisanceSet cross_fit(const SurveyDataset& data, const FoldAssignment& folds, double clip, const FitOptions& opts) {
  if (!(clip > 0.0 && clip < 0.5)) throw InputError("cross_fit: clip must lie in (0, 0.5)");
  if (folds.fold_of.size() != data.n()) throw InputError("cross_fit: fold assignment size mismatch");
  const auto n = static_cast<Eigen::Index>(data.n());
  const int J = data.j_count();
  const Matrix X = design_matrix(data);
  Vector y(n), t(n);
  std::vector<int> area(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    y(static_cast<Eigen::Index>(i)) = data[i].y;
    t(static_cast<Eigen::Index>(i)) = data[i].t;
    area[i] = data[i].area;
  }

  NuisanceSet out;
  out.folds = folds;
  out.clip = clip;
  out.models.resize(static_cast<std::size_t>(folds.k));
  out.m0.resize(n);
  out.m1.resize(n);
  out.e.resize(n);
  out.pi_a.resize(n, J);

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds.k));
#pragma omp parallel for schedule(static)
  for (int k = 1; k <= folds.k; ++k) {
    try {
      auto train = folds.complement(k);
      std::vector<std::size_t> treated, control;
      for (auto i : train) (data[i].t == 1 ? treated : control).push_back(i);
      if (treated.empty() || control.empty()) {
        throw InputError("cross_fit: training complement of fold " + std::to_string(k) +
                         " contains a single treatment arm; use fewer folds");
      }
      auto rows_of = [&](const std::vector<std::size_t>& idx) {
        Matrix m(static_cast<Eigen::Index>(idx.size()), X.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(idx[r]));
        return m;
      };
      auto vals_of = [](const Vector& v, const std::vector<std::size_t>& idx) {
        Vector o(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r) o(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(idx[r]));
        return o;
      };
      FoldModels fm;
      fm.m1 = ols_fit(rows_of(treated), vals_of(y, treated), true);
      fm.m0 = ols_fit(rows_of(control), vals_of(y, control), true);
      Matrix Xtrain = rows_of(train);
      fm.e = logistic_fit(Xtrain, vals_of(t, train), opts);
      std::vector<int> labels(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) labels[r] = area[train[r]];
      fm.pi_a = multinomial_fit(Xtrain, labels, J, opts);
      out.models[static_cast<std::size_t>(k - 1)] = std::move(fm);
    } catch (...) {
      errors[static_cast<std::size_t>(k - 1)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int k = 1; k <= folds.k; ++k) {
    const auto& fm = out.models[static_cast<std::size_t>(k - 1)];
    out.any_ridge = out.any_ridge || fm.m0.ridge_used || fm.m1.ridge_used || fm.e.ridge_used || fm.pi_a.ridge_used;
    auto idx = folds.members(k);
    Matrix Xk(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) Xk.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(idx[r]));
    Vector m0 = fm.m0.predict(Xk), m1 = fm.m1.predict(Xk), e = fm.e.predict(Xk);
    Matrix pa = fm.pi_a.predict(Xk);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto i = static_cast<Eigen::Index>(idx[r]);
      auto rr = static_cast<Eigen::Index>(r);
      out.m0(i) = m0(rr);
      out.m1(i) = m1(rr);
      out.e(i) = std::clamp(e(rr), clip, 1.0 - clip);
      out.pi_a.row(i) = pa.row(rr);
      clip_and_normalize(out.pi_a.row(i), clip);
    }
  }
  return out;
}

void write_models_csv(const NuisanceSet& nuis, std::size_t dim_x, std::size_t dim_z, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  std::vector<std::string> terms{"intercept"};
  for (std::size_t k = 0; k < dim_x; ++k) terms.push_back("x_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < dim_z; ++k) terms.push_back("z_" + std::to_string(k + 1));
  csv::write_row(out, {"model", "term", "value"});
  for (std::size_t f = 0; f < nuis.models.size(); ++f) {
    const auto& fm = nuis.models[f];
    const std::string fold = "fold" + std::to_string(f + 1);
    auto emit = [&](const std::string& model, const Vector& coef) {
      for (Eigen::Index c = 0; c < coef.size(); ++c) {
        csv::write_row(out, {fold + "/" + model, terms[static_cast<std::size_t>(c)], csv::format(coef(c))});
      }
    };
    emit("m0", fm.m0.coef);
    emit("m1", fm.m1.coef);
    emit("e", fm.e.coef);
    for (Eigen::Index a = 0; a < fm.pi_a.coef.rows(); ++a) {
      emit("pi_a/area" + std::to_string(a + 2), fm.pi_a.coef.row(a).transpose());
    }
  }
}

}  // namespace drsae
