#ifndef TAGLASSO_SIMULATION_HPP
#define TAGLASSO_SIMULATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "taglasso/select.hpp"

namespace taglasso {

enum class DesignKind { chain, random_pair, unbalanced, unstructured };

std::string design_kind_name(DesignKind kind);
DesignKind design_kind_from_name(const std::string& name);

// Precision-matrix design: diagonal 1, entries 0.5 within aggregated blocks,
// 0.25 on connected block pairs. Which pairs are connected depends on kind:
// consecutive blocks (chain, unbalanced), one seeded pair (random_pair), or a
// seeded sparse variable-level pattern (unstructured, singleton blocks).
struct DesignSpec {
  DesignKind kind = DesignKind::chain;
  int p = 15;
  std::vector<int> block_sizes;  // empty selects the per-kind default
  double diag_value = 1.0;
  double within_block = 0.5;
  double cross_block = 0.25;
  int n_edges = 10;  // unstructured only
  std::uint64_t seed = 1;

  std::vector<int> resolved_block_sizes() const;
};

struct Design {
  Matrix omega;
  Matrix sigma;
  Partition truth;
  Matrix support_mask;  // p x p 0/1, ones on the diagonal
};

Design design_precision(const DesignSpec& spec);

// Root -> one group node per block -> leaves.
AggregationTree ideal_tree(const Partition& partition);

// Dendrogram from average-linkage clustering of seeded latent scalars, one
// cluster mean per block at mu_i = 1/i with spread 0.05 * min_j |mu_i - mu_j|.
AggregationTree realistic_tree(const std::vector<int>& block_sizes, std::uint64_t seed);

// n iid rows from N(0, omega^-1), seeded.
Matrix sample_gaussian(const Matrix& omega, int n, std::uint64_t seed);

// -logdet(Sigma Omega_hat) + tr(Sigma Omega_hat) - p
double kl_distance(const Matrix& sigma_true, const Matrix& omega_hat);

struct SimilarityResult {
  double ri = 0.0;
  double ari = 0.0;
  bool ari_defined = true;
};
SimilarityResult partition_similarity(const Partition& truth, const Partition& estimate);

// Rates over unordered off-diagonal pairs; an empty denominator yields 0 with
// the corresponding defined flag cleared.
struct Rates {
  double fpr = 0.0;
  double fnr = 0.0;
  bool fpr_defined = true;
  bool fnr_defined = true;
};
Rates fpr_fnr(const Matrix& truth_mask, const Matrix& estimated_mask);

enum class Estimator { oracle, taglasso_ideal, taglasso_realistic, glasso };
std::string estimator_name(Estimator e);
Estimator estimator_from_name(const std::string& name);

struct StudyRow {
  std::string design;
  int p = 0;
  int n = 0;
  int k_true = 0;
  std::string estimator;
  int rep = 0;
  std::uint64_t seed = 0;
  double kl = 0.0;
  double ri = 0.0;
  double ari = 0.0;
  bool ari_defined = true;
  double fpr = 0.0;
  double fnr = 0.0;
  bool failed = false;
  std::string error;
};

// Solver-health maxima over every fit and refit the study ran; used by the
// acceptance checks.
struct StudyDiagnostics {
  double max_final_residual = 0.0;       // final fits at chosen penalties
  double max_refit_offpattern = 0.0;     // over all refits (CV cells + final)
  double max_refit_structural_gap = 0.0;
  double max_refit_residual = 0.0;
  bool ubar_zero_after_first = true;     // averaged-dual identity on traced fits
  double max_mean_dual_drift = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  StudyDiagnostics diagnostics;
};

// Replicated benchmark: per replication draw data, run the requested
// estimators (CV-tuned where applicable), and record every metric. Fit errors
// are recorded in the affected row, not fatal to the study.
StudyResult run_study(const DesignSpec& spec, int n, int reps,
                      const std::vector<Estimator>& estimators, const SolverConfig& config,
                      std::uint64_t seed, int jobs = 1, int cv_folds = 5, int grid_size = 10);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace taglasso

#endif
