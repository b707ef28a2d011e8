#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drsae/data_model.hpp"

namespace drsae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct FitOptions {
  int max_iter = 100;
  double step_tol = 1e-10;       // absolute max-norm of a Newton step
  double grad_tol_per_n = 1e-8;  // score max-norm tolerance, scaled by n
  double ridge = 1e-2;           // penalty used on separation or missing classes
  bool allow_ridge = true;
};

/// Least-squares outcome regression m_t over the (1, X, Z) design.
struct LinearModel {
  Vector coef;
  bool ridge_used = false;

  Vector predict(const Matrix& design) const { return design * coef; }
};

struct LogitModel {
  Vector coef;
  bool ridge_used = false;
  int iterations = 0;
  std::vector<double> loglik_trace;  // objective after each accepted step

  Vector predict(const Matrix& design) const;
};

/// Softmax over J classes with class 1 as the zero-coefficient reference.
/// `coef` has J-1 rows (classes 2..J) and one column per design column.
struct MultinomialModel {
  Matrix coef;
  int classes = 0;
  bool ridge_used = false;
  bool missing_class = false;  // some class absent from the training rows
  int iterations = 0;
  std::vector<double> loglik_trace;

  /// n x J probabilities, each row summing to one.
  Matrix predict(const Matrix& design) const;
};

/// Throws SingularDesignError on a rank-deficient design unless
/// `ridge_fallback` is set, in which case a 1e-8 ridge is added.
LinearModel ols_fit(const Matrix& design, const Vector& response, bool ridge_fallback = false);

/// Newton/IRLS maximum likelihood with step-halving line search. On
/// non-convergence or quasi-separation the fit is repeated with an L2
/// penalty `opts.ridge` and `ridge_used` is set.
LogitModel logistic_fit(const Matrix& design, const Vector& response, const FitOptions& opts = {});

MultinomialModel multinomial_fit(const Matrix& design, std::span<const int> labels, int classes,
                                 const FitOptions& opts = {});

// Log-likelihoods and analytic scores, exposed for gradient checks.
double logistic_loglik(const Matrix& design, const Vector& response, const Vector& coef);
Vector logistic_gradient(const Matrix& design, const Vector& response, const Vector& coef);
double multinomial_loglik(const Matrix& design, std::span<const int> labels, int classes, const Matrix& coef);
Matrix multinomial_gradient(const Matrix& design, std::span<const int> labels, int classes, const Matrix& coef);

/// Negative Hessian of the multinomial log-likelihood, laid out with the
/// coefficient vector ordered class-major ((class 2, all terms), ...).
/// The blocked version groups per-row outer products into one matrix
/// product and runs row blocks in parallel; the serial version is the
/// plain triple loop kept as its reference.
Matrix multinomial_information(const Matrix& design, const Matrix& probs);
Matrix multinomial_information_serial(const Matrix& design, const Matrix& probs);

struct FoldAssignment {
  std::vector<int> fold_of;  // 1..k per record
  int k = 0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
};

FoldAssignment make_folds(std::size_t n, int k, std::uint64_t seed);

/// (1, x, z) design rows for the given records.
Matrix design_matrix(const SurveyDataset& data, std::span<const std::size_t> rows);
Matrix design_matrix(const SurveyDataset& data);

struct FoldModels {
  LinearModel m0;
  LinearModel m1;
  LogitModel e;
  MultinomialModel pi_a;
};

/// Cross-fitted nuisance functions: every prediction for record i comes
/// from the models trained on the folds other than fold_of[i].
struct NuisanceSet {
  FoldAssignment folds;
  std::vector<FoldModels> models;  // index k-1
  Vector m0;
  Vector m1;
  Vector e;     // clipped to [clip, 1-clip]
  Matrix pi_a;  // n x J, clipped then renormalized per row
  double clip = 0.01;
  bool any_ridge = false;

  double pi_a_of(std::size_t i, int j) const { return pi_a(static_cast<Eigen::Index>(i), j - 1); }
};

/// Throws InputError if a training complement lacks a treatment arm.
NuisanceSet cross_fit(const SurveyDataset& data, const FoldAssignment& folds, double clip = 0.01,
                      const FitOptions& opts = {});

/// Clips a probability row to [clip, 1-clip] and renormalizes it.
void clip_and_normalize(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, double clip);

/// Writes `model,term,value` rows for every fold model.
void write_models_csv(const NuisanceSet& nuis, std::size_t dim_x, std::size_t dim_z, const std::string& path);

}  // namespace drsae
