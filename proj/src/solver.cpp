#include "taglasso/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace taglasso {

namespace {

Matrix logdet_eigenvalue_map(const Matrix& q, Vector vals, double rho) {
  for (int i = 0; i < vals.size(); ++i) {
    vals(i) = (vals(i) + std::sqrt(vals(i) * vals(i) + 4.0 * rho)) / (2.0 * rho);
  }
  Matrix out = q * vals.asDiagonal() * q.transpose();
  return (out + out.transpose()) / 2.0;
}

}  // namespace

StructuredFactor build_structured_factor(const AncestorMatrix& ancestor) {
  StructuredFactor f;
  f.a = ancestor.a;
  f.root_row = ancestor.root_col;
  const int p = f.p();
  const int t = f.t();

  Matrix ata_plus_i = f.a.transpose() * f.a + Matrix::Identity(t, t);
  Eigen::LDLT<Matrix> solve(ata_plus_i);

  // gamma_solver = (A'A + I)^-1 [A' : I]
  Matrix rhs(t, p + t);
  rhs.leftCols(p) = f.a.transpose();
  rhs.rightCols(t) = Matrix::Identity(t, t);
  f.gamma_solver = solve.solve(rhs);

  // C = [I_p; 0] - Atilde (A'A + I)^-1 A', with Atilde = [A; I].
  Matrix ga_t = solve.solve(f.a.transpose());  // t x p
  f.c = Matrix::Zero(p + t, p);
  f.c.topRows(p) = Matrix::Identity(p, p) - f.a * ga_t;
  f.c.bottomRows(t) = -ga_t;

  f.c_colnorms2 = f.c.colwise().squaredNorm();
  for (int j = 0; j < p; ++j) {
    if (f.c_colnorms2(j) <= 1e-12) f.degenerate_cols.push_back(j);
  }
  return f;
}

Matrix prox_logdet(const Matrix& target, const Matrix& s, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("prox_logdet: rho must be > 0");
  Matrix m = target - s;
  m = ((m + m.transpose()) / 2.0).eval();
  if (!m.allFinite()) throw std::invalid_argument("prox_logdet: non-finite input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("prox_logdet: eigendecomposition failed");
  return logdet_eigenvalue_map(es.eigenvectors(), es.eigenvalues(), rho);
}

Matrix prox_group_rows(const Matrix& target, double rho, double lambda1, int root_row) {
  if (!(rho > 0.0)) throw std::invalid_argument("prox_group_rows: rho must be > 0");
  Matrix out = target;
  const double thresh = lambda1 / rho;
  for (int u = 0; u < out.rows(); ++u) {
    if (u == root_row) {
      out.row(u).setConstant(target.row(u).mean());
      continue;
    }
    if (lambda1 == 0.0) continue;
    const double norm = out.row(u).norm();
    if (norm <= thresh) {
      out.row(u).setZero();
    } else {
      out.row(u) *= 1.0 - thresh / norm;
    }
  }
  return out;
}

Matrix prox_l1_offdiag(const Matrix& target, double rho, double lambda2) {
  if (!(rho > 0.0)) throw std::invalid_argument("prox_l1_offdiag: rho must be > 0");
  const double thresh = lambda2 / rho;
  const int p = static_cast<int>(target.rows());
  Matrix out(p, p);
  for (int i = 0; i < p; ++i) {
    out(i, i) = target(i, i);
    for (int j = i + 1; j < p; ++j) {
      const double v = (target(i, j) + target(j, i)) / 2.0;
      const double soft = std::abs(v) <= thresh ? 0.0 : (v > 0 ? v - thresh : v + thresh);
      out(i, j) = soft;
      out(j, i) = soft;
    }
  }
  return out;
}

Matrix project_pattern(const Matrix& target, const Matrix& pattern) {
  const int p = static_cast<int>(target.rows());
  Matrix out(p, p);
  for (int i = 0; i < p; ++i) {
    out(i, i) = target(i, i);
    for (int j = i + 1; j < p; ++j) {
      const double v = pattern(i, j) != 0.0 ? (target(i, j) + target(j, i)) / 2.0 : 0.0;
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

StructuredUpdate structured_update(const StructuredFactor& factor, const Matrix& target_omega,
                                   const Matrix& target_gamma) {
  const int p = factor.p();
  const int t = factor.t();
  if (target_omega.rows() != p || target_gamma.rows() != t || target_gamma.cols() != p) {
    throw std::invalid_argument("structured_update: target dimension mismatch");
  }

  StructuredUpdate out;
  // d_j = max(Mtilde_j . C_j, 0) / ||C_j||^2, column by column. The projected
  // residual identity diag(B'C) = diag(Mtilde'C) lets us skip forming B.
  out.d = Vector::Zero(p);
  for (int j = 0; j < p; ++j) {
    if (factor.c_colnorms2(j) <= 1e-12) {
      out.d(j) = 0.0;
      out.degenerate_cols.push_back(j);
      continue;
    }
    const double num = target_omega.col(j).dot(factor.c.col(j).head(p)) +
                       target_gamma.col(j).dot(factor.c.col(j).tail(t));
    out.d(j) = std::max(num, 0.0) / factor.c_colnorms2(j);
  }

  // Gamma2 = (A'A + I)^-1 [A' : I] (Mtilde - Dtilde)
  Matrix top = target_omega;
  top.diagonal() -= out.d;
  out.gam2.noalias() = factor.gamma_solver.leftCols(p) * top;
  out.gam2.noalias() += factor.gamma_solver.rightCols(t) * target_gamma;

  out.om2.noalias() = factor.a * out.gam2;
  out.om2.diagonal() += out.d;
  return out;
}

AdmmState admm_stage(const SampleCovariance& s, const StructuredFactor& factor,
                     const Penalties& penalties, double rho, int maxit, const Matrix& warm_omega,
                     const Matrix& warm_gamma, const Matrix* pattern, SolveTrace* trace) {
  const int p = factor.p();
  const int t = factor.t();
  if (warm_omega.rows() != p || warm_omega.cols() != p || warm_gamma.rows() != t ||
      warm_gamma.cols() != p) {
    throw std::invalid_argument("admm_stage: warm start dimension mismatch");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("admm_stage: rho must be > 0");
  maxit = std::max(maxit, 1);

  // Duals start at zero each stage. Initializing them to the warm-start
  // primal values makes the conserved dual mean nonzero, which shifts the
  // consensus fixed point and blows up once rho is small; zero initialization
  // keeps the averaged duals identically zero, matching the vanishing-dual
  // identity the consensus step relies on.
  AdmmState st;
  st.omega = warm_omega;
  st.gamma = warm_gamma;
  st.u1 = Matrix::Zero(p, p);
  st.u2 = Matrix::Zero(p, p);
  st.u3 = Matrix::Zero(p, p);
  st.u4 = Matrix::Zero(t, p);
  st.u5 = Matrix::Zero(t, p);
  st.ubar_omega = Matrix::Zero(p, p);
  st.ubar_gamma = Matrix::Zero(t, p);

  for (int k = 1; k <= maxit; ++k) {
    if (trace && k >= 2) {
      if (st.ubar_omega.cwiseAbs().maxCoeff() != 0.0 || st.ubar_gamma.cwiseAbs().maxCoeff() != 0.0) {
        trace->ubar_zero_after_first = false;
      }
    }

    st.om1 = prox_logdet(rho * st.omega - st.u1, s.matrix, rho);
    if (pattern) {
      st.om3 = project_pattern(st.omega - st.u3 / rho, *pattern);
    } else {
      st.om3 = prox_l1_offdiag(st.omega - st.u3 / rho, rho, penalties.lambda2);
    }
    st.gam1 = prox_group_rows(st.gamma - st.u4 / rho, rho, penalties.lambda1, factor.root_row);
    StructuredUpdate su = structured_update(factor, st.omega - st.u2 / rho, st.gamma - st.u5 / rho);
    st.om2 = std::move(su.om2);
    st.gam2 = std::move(su.gam2);
    st.d = std::move(su.d);
    if (st.degenerate_cols.empty() && !su.degenerate_cols.empty()) {
      st.degenerate_cols = std::move(su.degenerate_cols);
    }

    // Consensus: the minimizer is the copy average plus the averaged dual over
    // rho; the averaged dual vanishes after the first iteration, so this is a
    // plain average from iteration 2 onward.
    st.omega = (st.om1 + st.om2 + st.om3) / 3.0 + st.ubar_omega / rho;
    st.gamma = (st.gam1 + st.gam2) / 2.0 + st.ubar_gamma / rho;

    st.u1 += rho * (st.om1 - st.omega);
    st.u2 += rho * (st.om2 - st.omega);
    st.u3 += rho * (st.om3 - st.omega);
    st.u4 += rho * (st.gam1 - st.gamma);
    st.u5 += rho * (st.gam2 - st.gamma);
    st.ubar_omega.setZero();
    st.ubar_gamma.setZero();

    if (trace && k >= 2) {
      const double drift = std::max(((st.u1 + st.u2 + st.u3) / 3.0).norm(),
                                    ((st.u4 + st.u5) / 2.0).norm());
      trace->max_mean_dual_drift = std::max(trace->max_mean_dual_drift, drift);
    }

    if (!st.omega.allFinite() || !st.gamma.allFinite()) {
      throw solver_divergence("admm_stage: non-finite iterate at iteration " + std::to_string(k),
                              k);
    }
  }

  st.residual_omega = std::max({(st.om1 - st.omega).norm(), (st.om2 - st.omega).norm(),
                                (st.om3 - st.omega).norm()});
  st.residual_gamma = std::max((st.gam1 - st.gamma).norm(), (st.gam2 - st.gamma).norm());
  return st;
}

AdmmState la_admm_core(const SampleCovariance& s, const StructuredFactor& factor,
                       const Penalties& penalties, const SolverConfig& config,
                       const Matrix* pattern, const Matrix* warm_omega, const Matrix* warm_gamma,
                       SolveTrace* trace, const std::function<bool(const AdmmState&)>& needs_more,
                       int max_extra_stages) {
  config.validate();
  const int p = factor.p();
  const int t = factor.t();
  if (s.dim() != p) throw std::invalid_argument("la_admm_core: covariance/tree dimension mismatch");

  Matrix omega = warm_omega ? *warm_omega : Matrix::Zero(p, p);
  Matrix gamma = warm_gamma ? *warm_gamma : Matrix::Zero(t, p);

  AdmmState st;
  double rho = config.rho1;
  int stage = 0;
  while (true) {
    ++stage;
    st = admm_stage(s, factor, penalties, rho, config.maxit, omega, gamma, pattern, trace);
    omega = st.omega;
    gamma = st.gamma;
    rho *= config.rho_factor;
    if (trace) trace->stage_residuals.push_back(st.residual());
    if (config.early_exit && st.residual() <= config.early_exit_tol) break;
    if (stage < config.t_stages) continue;
    if (needs_more && stage < config.t_stages + max_extra_stages && needs_more(st)) continue;
    break;
  }
  return st;
}

int TagLassoFit::edge_count() const {
  int count = 0;
  for (const auto& [i, j] : support) {
    if (i != j) count++;
  }
  return count;
}

namespace {

TagLassoFit fit_from_state(AdmmState&& st, const AncestorMatrix& ancestor,
                           const Penalties& penalties, const SolverConfig& config) {
  TagLassoFit fit;
  const int p = ancestor.p();
  fit.omega = (st.omega + st.omega.transpose()) / 2.0;
  fit.omega_pd = std::move(st.om1);
  fit.gamma = std::move(st.gam1);
  fit.d = std::move(st.d);
  fit.root_row = ancestor.root_col;
  fit.gamma_node_ids = ancestor.node_order;
  fit.residual_omega = st.residual_omega;
  fit.residual_gamma = st.residual_gamma;
  fit.penalties = penalties;
  fit.config = config;

  fit.support_mask = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    fit.support_mask(i, i) = 1.0;
    fit.support.emplace_back(i, i);
    for (int j = i + 1; j < p; ++j) {
      if (st.om3(i, j) != 0.0) {
        fit.support_mask(i, j) = 1.0;
        fit.support_mask(j, i) = 1.0;
        fit.support.emplace_back(i, j);
      }
    }
  }

  fit.partition = decode_partition(fit.gamma, ancestor, 0.0);
  for (int u = 0; u < ancestor.t(); ++u) {
    if (u == ancestor.root_col || fit.gamma.row(u).norm() > 0.0) {
      fit.z_nodes.push_back(ancestor.node_order[u]);
    }
  }
  return fit;
}

}  // namespace

TagLassoFit la_admm(const SampleCovariance& s, const AggregationTree& tree,
                    const Penalties& penalties, const SolverConfig& config, SolveTrace* trace) {
  if (tree.p() != s.dim()) {
    throw std::invalid_argument("la_admm: tree leaf count does not match covariance dimension");
  }
  AncestorMatrix ancestor = ancestor_matrix(tree);
  StructuredFactor factor = build_structured_factor(ancestor);
  AdmmState st = la_admm_core(s, factor, penalties, config, nullptr, nullptr, nullptr, trace);
  return fit_from_state(std::move(st), ancestor, penalties, config);
}

TagLassoFit fit_glasso(const SampleCovariance& s, double lambda2, const SolverConfig& config,
                       SolveTrace* trace) {
  if (s.dim() < 2) throw std::invalid_argument("fit_glasso: need p >= 2");
  AggregationTree star = star_tree(s.dim(), s.names);
  TagLassoFit fit = la_admm(s, star, Penalties{0.0, lambda2}, config, trace);
  fit.partition = Partition::singletons(s.dim());
  return fit;
}

}  // namespace taglasso
