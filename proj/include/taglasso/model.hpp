#ifndef TAGLASSO_MODEL_HPP
#define TAGLASSO_MODEL_HPP

#include <string>
#include <vector>

#include "taglasso/types.hpp"

namespace taglasso {

// Sample covariance matrix S = (1/n) Xc' Xc together with the sample size it
// was computed from. Columns with zero variance are allowed but recorded so
// callers can warn.
struct SampleCovariance {
  Matrix matrix;
  int n = 0;
  bool centered = true;
  std::vector<int> zero_variance_cols;
  std::vector<std::string> names;  // optional variable names (may be empty)

  int dim() const { return static_cast<int>(matrix.rows()); }
};

// A positive definite precision matrix estimate with the objective value and
// the consensus residual the solver finished at.
struct PrecisionEstimate {
  Matrix omega;
  double objective_value = 0.0;
  double converged_residual = 0.0;
};

// S = (1/n) Xc' Xc with Xc the column-mean-centered data. Requires n >= 2 and
// p >= 2 with finite entries.
SampleCovariance sample_covariance(const Matrix& data);

double smallest_eigenvalue(const Matrix& m);
double largest_eigenvalue(const Matrix& m);

// True iff the smallest eigenvalue of m exceeds tol. Throws on non-finite
// entries.
bool is_positive_definite(const Matrix& m, double tol = 1e-10);

// -logdet(omega) + tr(S * omega). Throws std::domain_error when omega is not
// positive definite.
double neg_log_likelihood(const Matrix& omega, const SampleCovariance& s);
double neg_log_likelihood(const Matrix& omega, const Matrix& s);

// logdet of a positive definite matrix via Cholesky; throws std::domain_error
// if the factorization fails.
double log_det_pd(const Matrix& m);

}  // namespace taglasso

#endif
