#ifndef TAGLASSO_SOLVER_HPP
#define TAGLASSO_SOLVER_HPP

#include <functional>
#include <utility>
#include <vector>

#include "taglasso/model.hpp"
#include "taglasso/tree.hpp"
#include "taglasso/types.hpp"

namespace taglasso {

// Quantities depending only on the ancestor matrix, computed once per fit and
// shared across iterations (and across concurrent fits on the same tree):
// the solve operator for the Gamma subproblem and the projected basis columns
// used by the diagonal update.
struct StructuredFactor {
  Matrix a;             // p x t ancestor matrix
  int root_row = -1;    // row of Gamma holding the root coefficients
  Matrix gamma_solver;  // t x (p+t): (A'A + I)^-1 [A' : I]
  Matrix c;             // (p+t) x p: [I_p; 0] - Atilde (A'A+I)^-1 A'
  Vector c_colnorms2;   // p: diagonal of C'C
  std::vector<int> degenerate_cols;  // columns with vanishing projected norm

  int p() const { return static_cast<int>(a.rows()); }
  int t() const { return static_cast<int>(a.cols()); }
};

StructuredFactor build_structured_factor(const AncestorMatrix& ancestor);

// One stage of the consensus ADMM. Copies, consensus variables and the five
// dual variables; ubar_* are the averaged duals entering the consensus step
// (exactly zero after the first iteration).
struct AdmmState {
  Matrix om1, om2, om3;
  Matrix gam1, gam2;
  Vector d;
  Matrix omega, gamma;  // consensus
  Matrix u1, u2, u3, u4, u5;
  Matrix ubar_omega, ubar_gamma;
  std::vector<int> degenerate_cols;
  double residual_omega = 0.0;
  double residual_gamma = 0.0;

  double residual() const { return std::max(residual_omega, residual_gamma); }
};

// Diagnostics recorded while iterating; used by tests to verify the
// averaged-dual identity without re-running the algebra.
struct SolveTrace {
  // True iff every averaged dual used from iteration 2 onward was exactly zero.
  bool ubar_zero_after_first = true;
  // Max Frobenius norm of the empirical mean of the stored individual duals,
  // over iterations >= 2 (float drift only; the algebraic value is zero).
  double max_mean_dual_drift = 0.0;
  std::vector<double> stage_residuals;
};

// Proximal map of -logdet(X) + tr(SX) at penalty rho: the target is the
// caller-composed rho * consensus - dual; internally S is subtracted, the
// result symmetrized and eigendecomposed, and each eigenvalue delta mapped to
// (delta + sqrt(delta^2 + 4 rho)) / (2 rho).
Matrix prox_logdet(const Matrix& target, const Matrix& s, double rho);

// Row-wise group soft-thresholding at lambda1 / rho; the root row is replaced
// by its mean replicated across all entries. Killed rows are exact zeros.
Matrix prox_group_rows(const Matrix& target, double rho, double lambda1, int root_row);

// Elementwise soft-thresholding of the off-diagonal entries at lambda2 / rho;
// the diagonal passes through. The input is symmetrized first so the zero
// pattern is symmetric exactly.
Matrix prox_l1_offdiag(const Matrix& target, double rho, double lambda2);

// Projection onto {X : X_ij = 0 for pattern_ij == 0} after symmetrizing, used
// by the refit. pattern must be symmetric with an all-ones diagonal.
Matrix project_pattern(const Matrix& target, const Matrix& pattern);

// Joint minimizer of || Atilde Gamma + Dtilde - Mtilde ||_F^2 over Gamma and
// diagonal D >= 0, where Mtilde stacks target_omega over target_gamma.
// Guarantees om2 = A gam2 + diag(d) exactly.
struct StructuredUpdate {
  Matrix om2;
  Matrix gam2;
  Vector d;
  std::vector<int> degenerate_cols;
};
StructuredUpdate structured_update(const StructuredFactor& factor, const Matrix& target_omega,
                                   const Matrix& target_gamma);

// Runs exactly max(maxit, 1) iterations at fixed rho from the warm start.
// When pattern is non-null the l1 prox is replaced by the pattern projection
// (the refit variant) and lambda2 is ignored.
AdmmState admm_stage(const SampleCovariance& s, const StructuredFactor& factor,
                     const Penalties& penalties, double rho, int maxit, const Matrix& warm_omega,
                     const Matrix& warm_gamma, const Matrix* pattern = nullptr,
                     SolveTrace* trace = nullptr);

// Staged solver: t_stages stages of admm_stage with rho multiplied by
// rho_factor between stages, warm-starting each stage from the previous
// consensus. Starts from zero matrices. After the configured stages, keeps
// doubling for at most max_extra_stages while needs_more(state) holds (the
// refit uses this to meet its feasibility contract).
AdmmState la_admm_core(const SampleCovariance& s, const StructuredFactor& factor,
                       const Penalties& penalties, const SolverConfig& config,
                       const Matrix* pattern = nullptr, const Matrix* warm_omega = nullptr,
                       const Matrix* warm_gamma = nullptr, SolveTrace* trace = nullptr,
                       const std::function<bool(const AdmmState&)>& needs_more = {},
                       int max_extra_stages = 0);

// Full solution of the penalized problem plus everything decoded from it.
struct TagLassoFit {
  Matrix omega;     // consensus estimate, symmetrized
  Matrix omega_pd;  // positive definite copy from the logdet subproblem
  Matrix gamma;     // |T| x p group-prox copy; killed rows are exact zeros
  Vector d;
  Matrix support_mask;                       // p x p 0/1, symmetric, ones on the diagonal
  std::vector<std::pair<int, int>> support;  // 0-based (i, j) with i <= j
  Partition partition;
  std::vector<int> z_nodes;  // node ids with nonzero gamma rows, root included
  std::vector<int> gamma_node_ids;  // row -> node id mapping for gamma
  int root_row = -1;
  double residual_omega = 0.0;
  double residual_gamma = 0.0;
  Penalties penalties;
  SolverConfig config;

  double residual() const { return std::max(residual_omega, residual_gamma); }
  int edge_count() const;  // off-diagonal support pairs, counted once
};

TagLassoFit la_admm(const SampleCovariance& s, const AggregationTree& tree,
                    const Penalties& penalties, const SolverConfig& config,
                    SolveTrace* trace = nullptr);

// Glasso special case: lambda1 = 0 with a star tree; the partition is the
// singleton partition by construction.
TagLassoFit fit_glasso(const SampleCovariance& s, double lambda2, const SolverConfig& config,
                       SolveTrace* trace = nullptr);

}  // namespace taglasso

#endif
