#ifndef TAGLASSO_REFIT_HPP
#define TAGLASSO_REFIT_HPP

#include <vector>

#include "taglasso/solver.hpp"

namespace taglasso {

// Aggregation and sparsity constraints for the likelihood refit: the retained
// tree nodes (root always included) and the permitted nonzero pattern
// (symmetric, diagonal always permitted).
struct ConstraintSet {
  std::vector<int> z_nodes;  // node ids
  Matrix pattern;            // p x p 0/1

  static ConstraintSet from_fit(const TagLassoFit& fit);
  void validate(int p) const;
};

// Constrained maximum-likelihood refit output. estimate.omega is the positive
// definite copy; gamma holds only the retained rows (rows outside Z are
// structural zeros).
struct RefitResult {
  PrecisionEstimate estimate;
  Matrix omega_consensus;
  Matrix gamma;               // |Z| x p, rows aligned with z_nodes
  std::vector<int> z_nodes;   // sorted node ids
  Vector d;
  double max_offpattern_abs = 0.0;  // max |omega_ij| outside the pattern
  double structural_gap = 0.0;      // || omega - (A_Z gamma + diag d) ||_max
  double residual_omega = 0.0;
  double residual_gamma = 0.0;
};

// Solves the likelihood problem subject to the aggregation and sparsity
// constraints with the same staged ADMM, replacing the group prox by a hard
// row projection and the l1 prox by the pattern projection. Optional warm
// start from a previous penalized fit on the same data.
RefitResult refit(const SampleCovariance& s, const AggregationTree& tree,
                  const ConstraintSet& constraints, const SolverConfig& config,
                  const Matrix* warm_omega = nullptr, const TagLassoFit* warm_fit = nullptr);

}  // namespace taglasso

#endif
