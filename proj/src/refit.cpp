#include "taglasso/refit.hpp"

#include <algorithm>
#include <unordered_map>

#include "taglasso/model.hpp"

namespace taglasso {

ConstraintSet ConstraintSet::from_fit(const TagLassoFit& fit) {
  ConstraintSet cs;
  cs.z_nodes = fit.z_nodes;
  cs.pattern = fit.support_mask;
  return cs;
}

void ConstraintSet::validate(int p) const {
  if (pattern.rows() != p || pattern.cols() != p) {
    throw std::invalid_argument("ConstraintSet: pattern dimension mismatch");
  }
  for (int i = 0; i < p; ++i) {
    if (pattern(i, i) == 0.0) throw std::invalid_argument("ConstraintSet: diagonal must be permitted");
    for (int j = i + 1; j < p; ++j) {
      if (pattern(i, j) != pattern(j, i)) {
        throw std::invalid_argument("ConstraintSet: pattern must be symmetric");
      }
    }
  }
  if (z_nodes.empty()) throw std::invalid_argument("ConstraintSet: empty node set");
}

namespace {

// Ancestor matrix restricted to the retained nodes; columns sorted by node id
// so the reduced system reuses the same machinery as the full one.
AncestorMatrix restrict_columns(const AncestorMatrix& full, std::vector<int> z_nodes, int root_id) {
  std::sort(z_nodes.begin(), z_nodes.end());
  z_nodes.erase(std::unique(z_nodes.begin(), z_nodes.end()), z_nodes.end());
  if (!std::binary_search(z_nodes.begin(), z_nodes.end(), root_id)) {
    z_nodes.insert(std::lower_bound(z_nodes.begin(), z_nodes.end(), root_id), root_id);
  }
  AncestorMatrix out;
  out.node_order = z_nodes;
  out.a = Matrix::Zero(full.p(), static_cast<int>(z_nodes.size()));
  for (size_t c = 0; c < z_nodes.size(); ++c) {
    out.a.col(static_cast<int>(c)) = full.a.col(full.col_of(z_nodes[c]));
    if (z_nodes[c] == root_id) out.root_col = static_cast<int>(c);
  }
  return out;
}

}  // namespace

RefitResult refit(const SampleCovariance& s, const AggregationTree& tree,
                  const ConstraintSet& constraints, const SolverConfig& config,
                  const Matrix* warm_omega, const TagLassoFit* warm_fit) {
  const int p = s.dim();
  constraints.validate(p);
  if (tree.p() != p) {
    throw std::invalid_argument("refit: tree leaf count does not match covariance dimension");
  }

  AncestorMatrix full = ancestor_matrix(tree);
  const int root_id = full.node_order[full.root_col];
  for (int id : constraints.z_nodes) {
    full.col_of(id);  // throws when a constraint names an unknown node
  }
  AncestorMatrix reduced = restrict_columns(full, constraints.z_nodes, root_id);
  StructuredFactor factor = build_structured_factor(reduced);

  Matrix warm_gamma;
  const Matrix* warm_gamma_ptr = nullptr;
  if (warm_fit) {
    warm_gamma = Matrix::Zero(reduced.t(), p);
    std::unordered_map<int, int> row_by_id;
    for (size_t r = 0; r < warm_fit->gamma_node_ids.size(); ++r) {
      row_by_id[warm_fit->gamma_node_ids[r]] = static_cast<int>(r);
    }
    for (int c = 0; c < reduced.t(); ++c) {
      auto it = row_by_id.find(reduced.node_order[c]);
      if (it != row_by_id.end()) warm_gamma.row(c) = warm_fit->gamma.row(it->second);
    }
    warm_gamma_ptr = &warm_gamma;
  }

  // The refit contract pins |omega_ij| <= 1e-8 off-pattern and a structural
  // gap <= 1e-6; keep doubling rho past the configured stages until the
  // margins hold (with headroom), up to a bounded number of extra stages.
  auto margins = [&](const AdmmState& st) {
    double offpattern = 0.0;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        if (constraints.pattern(i, j) == 0.0) {
          offpattern = std::max(offpattern, std::abs(st.om1(i, j)));
        }
      }
    }
    Matrix structured = reduced.a * st.gam1;
    structured.diagonal() += st.d;
    const double gap = (st.om1 - structured).cwiseAbs().maxCoeff();
    return std::make_pair(offpattern, gap);
  };
  auto needs_more = [&](const AdmmState& st) {
    const auto [offpattern, gap] = margins(st);
    return offpattern > 0.5e-8 || gap > 0.5e-6;
  };

  SolveTrace trace;
  AdmmState st = la_admm_core(s, factor, Penalties{0.0, 0.0}, config, &constraints.pattern,
                              warm_omega, warm_gamma_ptr, &trace, needs_more, 20);

  RefitResult out;
  out.estimate.omega = st.om1;
  out.estimate.objective_value = neg_log_likelihood(st.om1, s);
  out.estimate.converged_residual = st.residual();
  out.omega_consensus = (st.omega + st.omega.transpose()) / 2.0;
  out.gamma = st.gam1;
  out.z_nodes = reduced.node_order;
  out.d = st.d;
  out.residual_omega = st.residual_omega;
  out.residual_gamma = st.residual_gamma;

  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (constraints.pattern(i, j) == 0.0) {
        out.max_offpattern_abs = std::max(out.max_offpattern_abs, std::abs(st.om1(i, j)));
      }
    }
  }
  Matrix structured = reduced.a * st.gam1;
  structured.diagonal() += st.d;
  out.structural_gap = (st.om1 - structured).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace taglasso
