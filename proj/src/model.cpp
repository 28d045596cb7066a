#include "taglasso/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace taglasso {

SampleCovariance sample_covariance(const Matrix& data) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n < 2) throw std::invalid_argument("sample_covariance: need at least 2 rows");
  if (p < 2) throw std::invalid_argument("sample_covariance: need at least 2 columns");
  if (!data.allFinite()) throw std::invalid_argument("sample_covariance: non-finite entries");

  Eigen::RowVectorXd mean = data.colwise().mean();
  Matrix centered = data.rowwise() - mean;
  SampleCovariance s;
  s.matrix = (centered.transpose() * centered) / static_cast<double>(n);
  s.matrix = ((s.matrix + s.matrix.transpose()) / 2.0).eval();
  s.n = static_cast<int>(n);
  s.centered = true;
  for (int j = 0; j < p; ++j) {
    if (s.matrix(j, j) == 0.0) s.zero_variance_cols.push_back(j);
  }
  return s;
}

double smallest_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double largest_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_positive_definite(const Matrix& m, double tol) {
  if (!m.allFinite()) throw std::invalid_argument("is_positive_definite: non-finite entries");
  return smallest_eigenvalue(m) > tol;
}

double log_det_pd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("log_det_pd: matrix is not positive definite");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double neg_log_likelihood(const Matrix& omega, const Matrix& s) {
  if (omega.rows() != s.rows() || omega.cols() != s.cols()) {
    throw std::invalid_argument("neg_log_likelihood: dimension mismatch");
  }
  return -log_det_pd(omega) + (s.cwiseProduct(omega)).sum();
}

double neg_log_likelihood(const Matrix& omega, const SampleCovariance& s) {
  return neg_log_likelihood(omega, s.matrix);
}

}  // namespace taglasso
