#include "taglasso/simulation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "taglasso/model.hpp"
#include "taglasso/parallel.hpp"

namespace taglasso {

std::string design_kind_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::chain: return "chain";
    case DesignKind::random_pair: return "random";
    case DesignKind::unbalanced: return "unbalanced";
    case DesignKind::unstructured: return "unstructured";
  }
  return "unknown";
}

DesignKind design_kind_from_name(const std::string& name) {
  if (name == "chain") return DesignKind::chain;
  if (name == "random") return DesignKind::random_pair;
  if (name == "unbalanced") return DesignKind::unbalanced;
  if (name == "unstructured") return DesignKind::unstructured;
  throw design_error("unknown design '" + name + "' (valid: chain, random, unbalanced, unstructured)");
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::oracle: return "oracle";
    case Estimator::taglasso_ideal: return "taglasso_ideal";
    case Estimator::taglasso_realistic: return "taglasso_realistic";
    case Estimator::glasso: return "glasso";
  }
  return "unknown";
}

Estimator estimator_from_name(const std::string& name) {
  if (name == "oracle") return Estimator::oracle;
  if (name == "taglasso_ideal") return Estimator::taglasso_ideal;
  if (name == "taglasso_realistic") return Estimator::taglasso_realistic;
  if (name == "glasso") return Estimator::glasso;
  throw design_error("unknown estimator '" + name +
                     "' (valid: oracle, taglasso_ideal, taglasso_realistic, glasso)");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step over seed xor salt
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> DesignSpec::resolved_block_sizes() const {
  if (!block_sizes.empty()) {
    int total = 0;
    for (int b : block_sizes) {
      if (b <= 0) throw design_error("block sizes must be positive");
      total += b;
    }
    if (total != p) throw design_error("block sizes must sum to p");
    if (kind == DesignKind::unstructured) {
      for (int b : block_sizes) {
        if (b != 1) throw design_error("unstructured design requires singleton blocks");
      }
    }
    return block_sizes;
  }
  switch (kind) {
    case DesignKind::chain:
    case DesignKind::random_pair: {
      // Three near-equal blocks.
      const int k = 3;
      if (p < k) throw design_error("need p >= 3 for a 3-block design");
      std::vector<int> sizes(k, p / k);
      for (int i = 0; i < p % k; ++i) sizes[i]++;
      return sizes;
    }
    case DesignKind::unbalanced: {
      if (p == 15) return {8, 4, 3};
      // Same proportions for other p.
      std::vector<int> sizes = {(8 * p) / 15, (4 * p) / 15, 0};
      sizes[0] = std::max(sizes[0], 1);
      sizes[1] = std::max(sizes[1], 1);
      sizes[2] = p - sizes[0] - sizes[1];
      if (sizes[2] <= 0) throw design_error("unbalanced design needs p >= 6");
      return sizes;
    }
    case DesignKind::unstructured:
      return std::vector<int>(p, 1);
  }
  throw design_error("invalid design kind");
}

namespace {

Matrix block_design_omega(const DesignSpec& spec, const Partition& partition,
                          const std::vector<std::pair<int, int>>& connected_blocks) {
  Matrix omega = Matrix::Identity(spec.p, spec.p) * spec.diag_value;
  for (int i = 0; i < spec.p; ++i) {
    for (int j = i + 1; j < spec.p; ++j) {
      if (partition.assignment[i] == partition.assignment[j]) {
        omega(i, j) = spec.within_block;
        omega(j, i) = spec.within_block;
      }
    }
  }
  for (auto [a, b] : connected_blocks) {
    for (int i = 0; i < spec.p; ++i) {
      for (int j = 0; j < spec.p; ++j) {
        const int bi = partition.assignment[i];
        const int bj = partition.assignment[j];
        if ((bi == a && bj == b) || (bi == b && bj == a)) {
          omega(i, j) = spec.cross_block;
        }
      }
    }
  }
  return omega;
}

}  // namespace

Design design_precision(const DesignSpec& spec) {
  if (spec.p < 2) throw design_error("design needs p >= 2");
  const std::vector<int> sizes = spec.resolved_block_sizes();
  Design design;
  design.truth = Partition::from_block_sizes(sizes);
  const int k = design.truth.k;

  if (spec.kind == DesignKind::unstructured) {
    const int max_edges = spec.p * (spec.p - 1) / 2;
    if (spec.n_edges < 0 || spec.n_edges > max_edges) {
      throw design_error("unstructured design: edge count out of range");
    }
    std::vector<std::pair<int, int>> all_pairs;
    for (int i = 0; i < spec.p; ++i) {
      for (int j = i + 1; j < spec.p; ++j) all_pairs.emplace_back(i, j);
    }
    // Seeded pattern; redraw a bounded number of times if the matrix is not
    // positive definite.
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::mt19937_64 rng(mix_seed(spec.seed, 1000 + attempt));
      std::vector<std::pair<int, int>> pairs = all_pairs;
      std::shuffle(pairs.begin(), pairs.end(), rng);
      pairs.resize(spec.n_edges);
      Matrix omega = Matrix::Identity(spec.p, spec.p) * spec.diag_value;
      for (auto [i, j] : pairs) {
        omega(i, j) = spec.cross_block;
        omega(j, i) = spec.cross_block;
      }
      if (smallest_eigenvalue(omega) > 1e-8) {
        design.omega = omega;
        break;
      }
    }
    if (design.omega.size() == 0) {
      throw design_error("unstructured design: no positive definite pattern found in 100 draws");
    }
  } else {
    std::vector<std::pair<int, int>> connected;
    if (spec.kind == DesignKind::chain || spec.kind == DesignKind::unbalanced) {
      for (int b = 0; b + 1 < k; ++b) connected.emplace_back(b, b + 1);
    } else {  // random_pair
      if (k < 2) throw design_error("random design needs at least 2 blocks");
      std::vector<std::pair<int, int>> pairs;
      for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) pairs.emplace_back(a, b);
      }
      std::mt19937_64 rng(mix_seed(spec.seed, 2000));
      std::uniform_int_distribution<size_t> pick(0, pairs.size() - 1);
      connected.push_back(pairs[pick(rng)]);
    }
    design.omega = block_design_omega(spec, design.truth, connected);
    const double lambda_min = smallest_eigenvalue(design.omega);
    if (lambda_min <= 1e-8) {
      std::ostringstream msg;
      msg << "design precision matrix is not positive definite (smallest eigenvalue "
          << lambda_min << ")";
      throw design_error(msg.str());
    }
  }

  const int p = spec.p;
  design.support_mask = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    design.support_mask(i, i) = 1.0;
    for (int j = i + 1; j < p; ++j) {
      if (design.omega(i, j) != 0.0) {
        design.support_mask(i, j) = 1.0;
        design.support_mask(j, i) = 1.0;
      }
    }
  }
  Eigen::LLT<Matrix> llt(design.omega);
  design.sigma = llt.solve(Matrix::Identity(p, p));
  design.sigma = ((design.sigma + design.sigma.transpose()) / 2.0).eval();
  return design;
}

AggregationTree ideal_tree(const Partition& partition) {
  AggregationTree tree;
  const int p = partition.p();
  const int k = partition.k;
  const int root = p + k + 1;
  for (int v = 0; v < p; ++v) {
    tree.nodes.push_back({v + 1, "V" + std::to_string(v + 1), p + 1 + partition.assignment[v]});
    tree.leaf_ids.push_back(v + 1);
  }
  for (int b = 0; b < k; ++b) {
    tree.nodes.push_back({p + 1 + b, "G" + std::to_string(b + 1), root});
  }
  tree.nodes.push_back({root, "root", -1});
  return tree;
}

AggregationTree realistic_tree(const std::vector<int>& block_sizes, std::uint64_t seed) {
  const int k = static_cast<int>(block_sizes.size());
  if (k < 2) throw design_error("realistic_tree: need at least 2 blocks");
  int p = 0;
  for (int b : block_sizes) {
    if (b <= 0) throw design_error("realistic_tree: block sizes must be positive");
    p += b;
  }

  std::vector<double> means(k);
  for (int i = 0; i < k; ++i) means[i] = 1.0 / (i + 1);
  std::vector<double> latent;
  latent.reserve(p);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < k; ++i) {
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      if (j != i) gap = std::min(gap, std::abs(means[i] - means[j]));
    }
    std::normal_distribution<double> dist(means[i], 0.05 * gap);
    for (int c = 0; c < block_sizes[i]; ++c) latent.push_back(dist(rng));
  }

  // Average-linkage agglomeration on absolute distances (Lance-Williams).
  struct Cluster {
    int node_id;
    int size;
  };
  std::vector<Cluster> active;
  for (int v = 0; v < p; ++v) active.push_back({v + 1, 1});
  Matrix dist = Matrix::Zero(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) dist(a, b) = std::abs(latent[a] - latent[b]);
  }

  AggregationTree tree;
  for (int v = 0; v < p; ++v) {
    tree.nodes.push_back({v + 1, "V" + std::to_string(v + 1), -1});
    tree.leaf_ids.push_back(v + 1);
  }

  int next_id = p + 1;
  std::vector<int> alive(p);
  for (int v = 0; v < p; ++v) alive[v] = v;
  while (alive.size() > 1) {
    size_t best_a = 0, best_b = 1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t x = 0; x < alive.size(); ++x) {
      for (size_t y = x + 1; y < alive.size(); ++y) {
        const double d = dist(alive[x], alive[y]);
        if (d < best_d) {
          best_d = d;
          best_a = x;
          best_b = y;
        }
      }
    }
    const int ia = alive[best_a];
    const int ib = alive[best_b];
    const int merged_id = next_id++;
    tree.nodes.push_back({merged_id, "n" + std::to_string(merged_id), -1});
    for (auto& n : tree.nodes) {
      if (n.id == active[ia].node_id || n.id == active[ib].node_id) n.parent = merged_id;
    }
    const double na = active[ia].size;
    const double nb = active[ib].size;
    for (size_t x = 0; x < alive.size(); ++x) {
      const int ix = alive[x];
      if (ix == ia || ix == ib) continue;
      const double d = (na * dist(ia, ix) + nb * dist(ib, ix)) / (na + nb);
      dist(ia, ix) = d;
      dist(ix, ia) = d;
    }
    active[ia] = {merged_id, active[ia].size + active[ib].size};
    alive.erase(alive.begin() + best_b);
  }
  return tree;
}

Matrix sample_gaussian(const Matrix& omega, int n, std::uint64_t seed) {
  const int p = static_cast<int>(omega.rows());
  if (n < 1) throw std::invalid_argument("sample_gaussian: need n >= 1");
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("sample_gaussian: omega is not positive definite");
  }
  // omega = L L' implies cov(L^-T z) = omega^-1 for z ~ N(0, I).
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, p);
  Vector z(p);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < p; ++c) z(c) = normal(rng);
    x.row(r) = llt.matrixU().solve(z).transpose();
  }
  return x;
}

double kl_distance(const Matrix& sigma_true, const Matrix& omega_hat) {
  const int p = static_cast<int>(sigma_true.rows());
  const double logdet = log_det_pd(sigma_true) + log_det_pd(omega_hat);
  const double trace = sigma_true.cwiseProduct(omega_hat).sum();
  return -logdet + trace - p;
}

namespace {

double comb2(double m) { return m * (m - 1.0) / 2.0; }

}  // namespace

SimilarityResult partition_similarity(const Partition& truth, const Partition& estimate) {
  const int p = truth.p();
  if (estimate.p() != p) throw std::invalid_argument("partition_similarity: length mismatch");

  SimilarityResult out;
  long long agree = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const bool same_t = truth.assignment[i] == truth.assignment[j];
      const bool same_e = estimate.assignment[i] == estimate.assignment[j];
      if (same_t == same_e) agree++;
    }
  }
  out.ri = static_cast<double>(agree) / comb2(p);

  Matrix contingency = Matrix::Zero(truth.k, estimate.k);
  for (int v = 0; v < p; ++v) contingency(truth.assignment[v], estimate.assignment[v]) += 1.0;
  double sum_cells = 0.0;
  for (int a = 0; a < truth.k; ++a) {
    for (int b = 0; b < estimate.k; ++b) sum_cells += comb2(contingency(a, b));
  }
  double sum_rows = 0.0;
  for (int a = 0; a < truth.k; ++a) sum_rows += comb2(contingency.row(a).sum());
  double sum_cols = 0.0;
  for (int b = 0; b < estimate.k; ++b) sum_cols += comb2(contingency.col(b).sum());
  const double expected = sum_rows * sum_cols / comb2(p);
  const double denom = (sum_rows + sum_cols) / 2.0 - expected;
  if (denom == 0.0) {
    out.ari = out.ri == 1.0 ? 1.0 : 0.0;
  } else {
    out.ari = (sum_cells - expected) / denom;
  }
  out.ari_defined = !truth.all_singletons();
  return out;
}

Rates fpr_fnr(const Matrix& truth_mask, const Matrix& estimated_mask) {
  const int p = static_cast<int>(truth_mask.rows());
  if (estimated_mask.rows() != p) throw std::invalid_argument("fpr_fnr: dimension mismatch");
  long long true_zero = 0, true_nonzero = 0, false_pos = 0, false_neg = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const bool t = truth_mask(i, j) != 0.0;
      const bool e = estimated_mask(i, j) != 0.0;
      if (t) {
        true_nonzero++;
        if (!e) false_neg++;
      } else {
        true_zero++;
        if (e) false_pos++;
      }
    }
  }
  Rates out;
  if (true_zero == 0) {
    out.fpr_defined = false;
  } else {
    out.fpr = static_cast<double>(false_pos) / true_zero;
  }
  if (true_nonzero == 0) {
    out.fnr_defined = false;
  } else {
    out.fnr = static_cast<double>(false_neg) / true_nonzero;
  }
  return out;
}

namespace {

struct RepOutput {
  std::vector<StudyRow> rows;
  StudyDiagnostics diag;
};

void merge_diag(StudyDiagnostics& into, const StudyDiagnostics& from) {
  into.max_final_residual = std::max(into.max_final_residual, from.max_final_residual);
  into.max_refit_offpattern = std::max(into.max_refit_offpattern, from.max_refit_offpattern);
  into.max_refit_structural_gap =
      std::max(into.max_refit_structural_gap, from.max_refit_structural_gap);
  into.max_refit_residual = std::max(into.max_refit_residual, from.max_refit_residual);
  into.ubar_zero_after_first = into.ubar_zero_after_first && from.ubar_zero_after_first;
  into.max_mean_dual_drift = std::max(into.max_mean_dual_drift, from.max_mean_dual_drift);
}

}  // namespace

StudyResult run_study(const DesignSpec& spec, int n, int reps,
                      const std::vector<Estimator>& estimators, const SolverConfig& config,
                      std::uint64_t seed, int jobs, int cv_folds, int grid_size) {
  if (reps < 1) throw std::invalid_argument("run_study: need reps >= 1");
  const Design design = design_precision(spec);
  const AggregationTree tree_ideal = ideal_tree(design.truth);
  const int p = spec.p;

  // Oracle constraints: root plus the group nodes of the ideal tree, and the
  // true sparsity pattern.
  ConstraintSet oracle_cs;
  oracle_cs.pattern = design.support_mask;
  for (int b = 0; b < design.truth.k; ++b) oracle_cs.z_nodes.push_back(p + 1 + b);
  oracle_cs.z_nodes.push_back(p + design.truth.k + 1);

  std::vector<RepOutput> outputs(reps);
  parallel_for(reps, jobs, [&](int rep) {
    const std::uint64_t rep_seed = mix_seed(seed, static_cast<std::uint64_t>(rep));
    const std::uint64_t data_seed = mix_seed(rep_seed, 1);
    const std::uint64_t tree_seed = mix_seed(rep_seed, 2);
    const std::uint64_t cv_seed = mix_seed(rep_seed, 3);
    const Matrix data = sample_gaussian(design.omega, n, data_seed);
    const SampleCovariance s = sample_covariance(data);

    RepOutput& out = outputs[rep];
    for (Estimator est : estimators) {
      StudyRow row;
      row.design = design_kind_name(spec.kind);
      row.p = p;
      row.n = n;
      row.k_true = design.truth.k;
      row.estimator = estimator_name(est);
      row.rep = rep + 1;
      row.seed = rep_seed;
      try {
        switch (est) {
          case Estimator::oracle: {
            RefitResult rr = refit(s, tree_ideal, oracle_cs, config);
            row.kl = kl_distance(design.sigma, rr.estimate.omega);
            const SimilarityResult sim = partition_similarity(design.truth, design.truth);
            row.ri = sim.ri;
            row.ari = sim.ari;
            row.ari_defined = sim.ari_defined;
            const Rates rates = fpr_fnr(design.support_mask, design.support_mask);
            row.fpr = rates.fpr;
            row.fnr = rates.fnr;
            out.diag.max_refit_offpattern =
                std::max(out.diag.max_refit_offpattern, rr.max_offpattern_abs);
            out.diag.max_refit_structural_gap =
                std::max(out.diag.max_refit_structural_gap, rr.structural_gap);
            out.diag.max_refit_residual = std::max(
                out.diag.max_refit_residual, std::max(rr.residual_omega, rr.residual_gamma));
            break;
          }
          case Estimator::taglasso_ideal:
          case Estimator::taglasso_realistic: {
            const AggregationTree tree = est == Estimator::taglasso_ideal
                                             ? tree_ideal
                                             : realistic_tree(design.truth.block_sizes(), tree_seed);
            const LambdaGrid grid = lambda_grid(s, tree, grid_size, config);
            const SelectionGrid sel =
                cross_validate(data, tree, grid, cv_folds, config, cv_seed, 1);
            SolveTrace trace;
            const TagLassoFit fit = la_admm(
                s, tree, Penalties{sel.chosen_lambda1, sel.chosen_lambda2}, config, &trace);
            const ConstraintSet cs = ConstraintSet::from_fit(fit);
            const RefitResult rr = refit(s, tree, cs, config, &fit.omega, &fit);

            row.kl = kl_distance(design.sigma, rr.estimate.omega);
            const SimilarityResult sim = partition_similarity(design.truth, fit.partition);
            row.ri = sim.ri;
            row.ari = sim.ari;
            row.ari_defined = sim.ari_defined;
            const Rates rates = fpr_fnr(design.support_mask, fit.support_mask);
            row.fpr = rates.fpr;
            row.fnr = rates.fnr;

            out.diag.max_final_residual = std::max(out.diag.max_final_residual, fit.residual());
            out.diag.ubar_zero_after_first =
                out.diag.ubar_zero_after_first && trace.ubar_zero_after_first;
            out.diag.max_mean_dual_drift =
                std::max(out.diag.max_mean_dual_drift, trace.max_mean_dual_drift);
            out.diag.max_refit_offpattern = std::max(
                {out.diag.max_refit_offpattern, sel.max_offpattern_abs, rr.max_offpattern_abs});
            out.diag.max_refit_structural_gap = std::max(
                {out.diag.max_refit_structural_gap, sel.max_structural_gap, rr.structural_gap});
            out.diag.max_refit_residual =
                std::max({out.diag.max_refit_residual, sel.max_refit_residual,
                          std::max(rr.residual_omega, rr.residual_gamma)});
            break;
          }
          case Estimator::glasso: {
            const GlassoSelection sel =
                cross_validate_glasso(data, grid_size, cv_folds, config, cv_seed, 1);
            SolveTrace trace;
            const TagLassoFit fit = fit_glasso(s, sel.chosen_lambda2, config, &trace);
            row.kl = kl_distance(design.sigma, fit.omega_pd);
            const SimilarityResult sim = partition_similarity(design.truth, fit.partition);
            row.ri = sim.ri;
            row.ari = sim.ari;
            row.ari_defined = sim.ari_defined;
            const Rates rates = fpr_fnr(design.support_mask, fit.support_mask);
            row.fpr = rates.fpr;
            row.fnr = rates.fnr;
            out.diag.max_final_residual = std::max(out.diag.max_final_residual, fit.residual());
            out.diag.ubar_zero_after_first =
                out.diag.ubar_zero_after_first && trace.ubar_zero_after_first;
            out.diag.max_mean_dual_drift =
                std::max(out.diag.max_mean_dual_drift, trace.max_mean_dual_drift);
            break;
          }
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      out.rows.push_back(std::move(row));
    }
  });

  StudyResult result;
  for (const auto& out : outputs) {
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    merge_diag(result.diagnostics, out.diag);
  }
  return result;
}

}  // namespace taglasso
