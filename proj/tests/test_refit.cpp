#include <doctest.h>

#include <limits>
#include <random>

#include "oracles.hpp"
#include "taglasso/model.hpp"
#include "taglasso/refit.hpp"
#include "taglasso/simulation.hpp"

using namespace taglasso;

namespace {

SampleCovariance cov(const Matrix& m, int n = 100) {
  SampleCovariance s;
  s.matrix = m;
  s.n = n;
  return s;
}

ConstraintSet all_free(const AggregationTree& tree, int p) {
  ConstraintSet cs;
  for (const auto& n : tree.nodes) cs.z_nodes.push_back(n.id);
  cs.pattern = Matrix::Ones(p, p);
  return cs;
}

}  // namespace

TEST_CASE("unconstrained refit recovers the MLE") {
  std::mt19937_64 rng(41);
  const Matrix s_mat = oracles::random_spd(4, rng);
  const SampleCovariance s = cov(s_mat);
  const AggregationTree tree = ideal_tree(Partition::from_block_sizes({2, 2}));

  const RefitResult rr = refit(s, tree, all_free(tree, 4), SolverConfig{});
  const Matrix target = s_mat.llt().solve(Matrix::Identity(4, 4));
  CHECK((rr.estimate.omega - target).norm() < 1e-4);
  CHECK(is_positive_definite(rr.estimate.omega, 0.0));
}

TEST_CASE("diagonal-only pattern gives the separable MLE") {
  std::mt19937_64 rng(42);
  const Matrix s_mat = oracles::random_spd(5, rng);
  const SampleCovariance s = cov(s_mat);
  const Partition singles = Partition::singletons(5);
  const AggregationTree tree = ideal_tree(singles);

  ConstraintSet cs;
  for (const auto& n : tree.nodes) cs.z_nodes.push_back(n.id);
  cs.pattern = Matrix::Identity(5, 5);
  const RefitResult rr = refit(s, tree, cs, SolverConfig{});
  for (int j = 0; j < 5; ++j) {
    CHECK(rr.estimate.omega(j, j) == doctest::Approx(1.0 / s_mat(j, j)).epsilon(1e-4));
  }
  CHECK(rr.max_offpattern_abs < 1e-8);
}

TEST_CASE("refit satisfies its constraints within tolerance") {
  const DesignSpec spec{DesignKind::chain, 9, {3, 3, 3}};
  const Design design = design_precision(spec);
  const Matrix data = sample_gaussian(design.omega, 80, 7);
  const SampleCovariance s = sample_covariance(data);
  const AggregationTree tree = ideal_tree(design.truth);

  // Constraints from a penalized fit.
  const TagLassoFit fit = la_admm(s, tree, Penalties{0.3, 0.1}, SolverConfig{});
  const ConstraintSet cs = ConstraintSet::from_fit(fit);
  const RefitResult rr = refit(s, tree, cs, SolverConfig{}, &fit.omega, &fit);

  CHECK(rr.max_offpattern_abs <= 1e-8);
  CHECK(rr.structural_gap <= 1e-6);
  // Retained node set matches the constraints (sorted), root included.
  CHECK(rr.z_nodes.size() == cs.z_nodes.size());

  // Likelihood no worse than the penalized fit's on the training data.
  const double refit_nll = neg_log_likelihood(rr.estimate.omega, s);
  const double fit_nll = neg_log_likelihood(fit.omega_pd, s);
  CHECK(refit_nll <= fit_nll + 1e-6);
}

TEST_CASE("refit under oracle constraints on the chain design") {
  const DesignSpec spec{DesignKind::chain, 9, {3, 3, 3}};
  const Design design = design_precision(spec);
  const AggregationTree tree = ideal_tree(design.truth);

  ConstraintSet cs;
  cs.pattern = design.support_mask;
  for (int b = 0; b < 3; ++b) cs.z_nodes.push_back(9 + 1 + b);
  cs.z_nodes.push_back(9 + 3 + 1);

  const Matrix data = sample_gaussian(design.omega, 200, 11);
  const SampleCovariance s = sample_covariance(data);
  const RefitResult rr = refit(s, tree, cs, SolverConfig{});

  CHECK(rr.max_offpattern_abs <= 1e-8);
  CHECK(rr.structural_gap <= 1e-6);
  // With n = 200 the constrained MLE should sit near the truth.
  CHECK(kl_distance(design.sigma, rr.estimate.omega) < 0.5);
}

TEST_CASE("constraint validation rejects malformed sets") {
  const AggregationTree tree = ideal_tree(Partition::from_block_sizes({2, 2}));
  ConstraintSet cs = all_free(tree, 4);
  cs.pattern(2, 2) = 0.0;
  CHECK_THROWS_AS(refit(cov(Matrix::Identity(4, 4)), tree, cs, SolverConfig{}),
                  std::invalid_argument);

  ConstraintSet asym = all_free(tree, 4);
  asym.pattern(0, 1) = 0.0;
  CHECK_THROWS_AS(refit(cov(Matrix::Identity(4, 4)), tree, asym, SolverConfig{}),
                  std::invalid_argument);

  ConstraintSet unknown = all_free(tree, 4);
  unknown.z_nodes.push_back(9999);
  CHECK_THROWS_AS(refit(cov(Matrix::Identity(4, 4)), tree, unknown, SolverConfig{}),
                  structure_error);
}

TEST_CASE("refit keeps the root when the constraint set omits it") {
  std::mt19937_64 rng(44);
  const Matrix s_mat = oracles::random_spd(4, rng);
  const AggregationTree tree = ideal_tree(Partition::from_block_sizes({2, 2}));
  ConstraintSet cs;
  cs.pattern = Matrix::Ones(4, 4);
  cs.z_nodes = {1, 2, 3, 4};  // leaves only, no root
  const RefitResult rr = refit(cov(s_mat), tree, cs, SolverConfig{});
  const int root_id = 4 + 2 + 1;
  bool has_root = false;
  for (int id : rr.z_nodes) has_root |= id == root_id;
  CHECK(has_root);
}
