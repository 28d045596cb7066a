#ifndef TAGLASSO_SELECT_HPP
#define TAGLASSO_SELECT_HPP

#include <cstdint>
#include <vector>

#include "taglasso/refit.hpp"
#include "taglasso/solver.hpp"

namespace taglasso {

// Descending penalty grids. lambda2 spans [eps * max|offdiag S|, max|offdiag S|]
// log-spaced; lambda1 tops out at the smallest tested value producing a single
// block (found by a doubling search at the median lambda2).
struct LambdaGrid {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
};

std::vector<double> lambda2_grid(const SampleCovariance& s, int size = 10, double eps = 1e-3);

LambdaGrid lambda_grid(const SampleCovariance& s, const AggregationTree& tree, int size = 10,
                       const SolverConfig& config = {}, double eps = 1e-3);

// Cross-validation scores over the grid plus the chosen pair (argmin, ties
// broken toward larger lambda1 then larger lambda2). Feasibility maxima from
// the per-cell refits are carried along for diagnostics.
struct SelectionGrid {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  Matrix cv_scores;  // lambda1 index by lambda2 index
  int chosen_i = -1;
  int chosen_j = -1;
  double chosen_lambda1 = 0.0;
  double chosen_lambda2 = 0.0;
  double max_offpattern_abs = 0.0;
  double max_structural_gap = 0.0;
  double max_refit_residual = 0.0;
};

// Shuffles the rows by seed into `folds` near-equal folds; scores every grid
// cell by the refitted out-of-fold likelihood, averaging over folds. Held-out
// covariances are centered with the training-fold means.
SelectionGrid cross_validate(const Matrix& data, const AggregationTree& tree,
                             const LambdaGrid& grid, int folds, const SolverConfig& config,
                             std::uint64_t seed, int jobs = 1);

// Full-data fit per grid cell; fits[i][j] corresponds to
// (lambda1_values[i], lambda2_values[j]).
std::vector<std::vector<TagLassoFit>> grid_fits(const SampleCovariance& s,
                                                const AggregationTree& tree,
                                                const LambdaGrid& grid,
                                                const SolverConfig& config, int jobs = 1);

// Restricted argmin over the cells whose full-data fit has at most k_max
// blocks. Throws selection_error when no cell qualifies.
struct ConstrainedChoice {
  int i = -1;
  int j = -1;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};
ConstrainedChoice constrained_select(const SelectionGrid& selection,
                                     const std::vector<std::vector<TagLassoFit>>& fits, int k_max);

// Glasso tuning: 10-point lambda2 grid scored with the penalized estimate
// (no refit), 5-fold CV.
struct GlassoSelection {
  std::vector<double> lambda2_values;
  std::vector<double> cv_scores;
  int chosen_j = -1;
  double chosen_lambda2 = 0.0;
};
GlassoSelection cross_validate_glasso(const Matrix& data, int grid_size, int folds,
                                      const SolverConfig& config, std::uint64_t seed,
                                      int jobs = 1);

// Fold bookkeeping shared by the CV routines (exposed for tests).
struct FoldSplit {
  std::vector<std::vector<int>> fold_rows;
};
FoldSplit make_folds(int n, int folds, std::uint64_t seed);
SampleCovariance covariance_of_rows(const Matrix& data, const std::vector<int>& rows);
// Covariance of the held-out rows centered by the training mean.
Matrix heldout_covariance(const Matrix& data, const std::vector<int>& heldout_rows,
                          const Eigen::RowVectorXd& train_mean);

}  // namespace taglasso

#endif
