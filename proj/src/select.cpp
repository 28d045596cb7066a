#include "taglasso/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "taglasso/model.hpp"
#include "taglasso/parallel.hpp"

namespace taglasso {

namespace {

std::vector<double> log_spaced_descending(double lo, double hi, int size) {
  std::vector<double> out(size);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < size; ++i) {
    const double f = size == 1 ? 0.0 : static_cast<double>(i) / (size - 1);
    out[i] = std::exp(lhi + f * (llo - lhi));
  }
  return out;
}

double max_offdiag_abs(const Matrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (i != j) best = std::max(best, std::abs(m(i, j)));
    }
  }
  return best;
}

}  // namespace

std::vector<double> lambda2_grid(const SampleCovariance& s, int size, double eps) {
  const double top = max_offdiag_abs(s.matrix);
  if (!(top > 0.0)) {
    throw design_error("lambda2_grid: degenerate grid, no off-diagonal signal in S");
  }
  return log_spaced_descending(eps * top, top, size);
}

LambdaGrid lambda_grid(const SampleCovariance& s, const AggregationTree& tree, int size,
                       const SolverConfig& config, double eps) {
  LambdaGrid grid;
  grid.lambda2_values = lambda2_grid(s, size, eps);
  const double lambda2_median = grid.lambda2_values[size / 2];

  // Doubling search for the smallest tested lambda1 whose fit aggregates all
  // variables into a single block.
  auto k_at = [&](double lambda1) {
    return la_admm(s, tree, Penalties{lambda1, lambda2_median}, config).partition.k;
  };
  double lambda1 = max_offdiag_abs(s.matrix);
  double lambda1_max = 0.0;
  if (k_at(lambda1) == 1) {
    while (lambda1 > 1e-12) {
      const double half = lambda1 / 2.0;
      if (k_at(half) == 1) {
        lambda1 = half;
      } else {
        break;
      }
    }
    lambda1_max = lambda1;
  } else {
    for (int step = 0; step < 60; ++step) {
      lambda1 *= 2.0;
      if (k_at(lambda1) == 1) break;
    }
    lambda1_max = lambda1;
  }
  grid.lambda1_values = log_spaced_descending(eps * lambda1_max, lambda1_max, size);
  return grid;
}

FoldSplit make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
  if (n < folds) throw std::invalid_argument("make_folds: need n >= folds");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldSplit split;
  split.fold_rows.resize(folds);
  const int base = n / folds;
  const int extra = n % folds;
  int pos = 0;
  for (int k = 0; k < folds; ++k) {
    const int len = base + (k < extra ? 1 : 0);
    if (len < 2) {
      throw selection_error("cross-validation fold " + std::to_string(k + 1) +
                            " has fewer than 2 rows");
    }
    split.fold_rows[k].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return split;
}

SampleCovariance covariance_of_rows(const Matrix& data, const std::vector<int>& rows) {
  Matrix sub(static_cast<int>(rows.size()), data.cols());
  for (size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<int>(r)) = data.row(rows[r]);
  return sample_covariance(sub);
}

Matrix heldout_covariance(const Matrix& data, const std::vector<int>& heldout_rows,
                          const Eigen::RowVectorXd& train_mean) {
  Matrix sub(static_cast<int>(heldout_rows.size()), data.cols());
  for (size_t r = 0; r < heldout_rows.size(); ++r) {
    sub.row(static_cast<int>(r)) = data.row(heldout_rows[r]) - train_mean;
  }
  Matrix s = (sub.transpose() * sub) / static_cast<double>(heldout_rows.size());
  return (s + s.transpose()) / 2.0;
}

namespace {

struct FoldData {
  SampleCovariance s_train;
  Matrix s_out;
};

std::vector<FoldData> prepare_folds(const Matrix& data, int folds, std::uint64_t seed) {
  const int n = static_cast<int>(data.rows());
  FoldSplit split = make_folds(n, folds, seed);
  std::vector<FoldData> out(folds);
  for (int k = 0; k < folds; ++k) {
    std::vector<int> train_rows;
    train_rows.reserve(n - split.fold_rows[k].size());
    for (int f = 0; f < folds; ++f) {
      if (f == k) continue;
      train_rows.insert(train_rows.end(), split.fold_rows[f].begin(), split.fold_rows[f].end());
    }
    Matrix train(static_cast<int>(train_rows.size()), data.cols());
    for (size_t r = 0; r < train_rows.size(); ++r) {
      train.row(static_cast<int>(r)) = data.row(train_rows[r]);
    }
    Eigen::RowVectorXd train_mean = train.colwise().mean();
    out[k].s_train = sample_covariance(train);
    out[k].s_out = heldout_covariance(data, split.fold_rows[k], train_mean);
  }
  return out;
}

}  // namespace

SelectionGrid cross_validate(const Matrix& data, const AggregationTree& tree,
                             const LambdaGrid& grid, int folds, const SolverConfig& config,
                             std::uint64_t seed, int jobs) {
  const int n1 = static_cast<int>(grid.lambda1_values.size());
  const int n2 = static_cast<int>(grid.lambda2_values.size());
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("cross_validate: empty grid");

  std::vector<FoldData> fold_data = prepare_folds(data, folds, seed);

  struct CellFold {
    double score = 0.0;
    double offpattern = 0.0;
    double gap = 0.0;
    double residual = 0.0;
  };
  std::vector<CellFold> results(static_cast<size_t>(n1) * n2 * folds);

  parallel_for(n1 * n2 * folds, jobs, [&](int task) {
    const int i = task / (n2 * folds);
    const int j = (task / folds) % n2;
    const int k = task % folds;
    const Penalties penalties{grid.lambda1_values[i], grid.lambda2_values[j]};
    TagLassoFit fit = la_admm(fold_data[k].s_train, tree, penalties, config);
    ConstraintSet cs = ConstraintSet::from_fit(fit);
    RefitResult rr = refit(fold_data[k].s_train, tree, cs, config, &fit.omega, &fit);
    CellFold& cell = results[task];
    cell.score = neg_log_likelihood(rr.estimate.omega, fold_data[k].s_out);
    cell.offpattern = rr.max_offpattern_abs;
    cell.gap = rr.structural_gap;
    cell.residual = std::max(rr.residual_omega, rr.residual_gamma);
  });

  SelectionGrid sel;
  sel.lambda1_values = grid.lambda1_values;
  sel.lambda2_values = grid.lambda2_values;
  sel.cv_scores = Matrix::Zero(n1, n2);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      double sum = 0.0;
      for (int k = 0; k < folds; ++k) {
        const CellFold& cell = results[(static_cast<size_t>(i) * n2 + j) * folds + k];
        sum += cell.score;
        sel.max_offpattern_abs = std::max(sel.max_offpattern_abs, cell.offpattern);
        sel.max_structural_gap = std::max(sel.max_structural_gap, cell.gap);
        sel.max_refit_residual = std::max(sel.max_refit_residual, cell.residual);
      }
      sel.cv_scores(i, j) = sum / folds;
    }
  }

  // Grids are descending, so scanning in order keeps the largest lambda1 then
  // largest lambda2 on ties.
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      if (sel.cv_scores(i, j) < best) {
        best = sel.cv_scores(i, j);
        sel.chosen_i = i;
        sel.chosen_j = j;
      }
    }
  }
  sel.chosen_lambda1 = sel.lambda1_values[sel.chosen_i];
  sel.chosen_lambda2 = sel.lambda2_values[sel.chosen_j];
  return sel;
}

std::vector<std::vector<TagLassoFit>> grid_fits(const SampleCovariance& s,
                                                const AggregationTree& tree,
                                                const LambdaGrid& grid,
                                                const SolverConfig& config, int jobs) {
  const int n1 = static_cast<int>(grid.lambda1_values.size());
  const int n2 = static_cast<int>(grid.lambda2_values.size());
  std::vector<std::vector<TagLassoFit>> fits(n1, std::vector<TagLassoFit>(n2));
  parallel_for(n1 * n2, jobs, [&](int task) {
    const int i = task / n2;
    const int j = task % n2;
    fits[i][j] = la_admm(s, tree, Penalties{grid.lambda1_values[i], grid.lambda2_values[j]}, config);
  });
  return fits;
}

ConstrainedChoice constrained_select(const SelectionGrid& selection,
                                     const std::vector<std::vector<TagLassoFit>>& fits,
                                     int k_max) {
  ConstrainedChoice choice;
  double best = std::numeric_limits<double>::infinity();
  int min_k = std::numeric_limits<int>::max();
  for (size_t i = 0; i < fits.size(); ++i) {
    for (size_t j = 0; j < fits[i].size(); ++j) {
      const int k = fits[i][j].partition.k;
      min_k = std::min(min_k, k);
      if (k > k_max) continue;
      const double score = selection.cv_scores(static_cast<int>(i), static_cast<int>(j));
      if (score < best) {
        best = score;
        choice.i = static_cast<int>(i);
        choice.j = static_cast<int>(j);
      }
    }
  }
  if (choice.i < 0) {
    std::ostringstream msg;
    msg << "constrained_select: no grid cell has K <= " << k_max << " (minimum achieved K is "
        << min_k << ")";
    throw selection_error(msg.str());
  }
  choice.lambda1 = selection.lambda1_values[choice.i];
  choice.lambda2 = selection.lambda2_values[choice.j];
  return choice;
}

GlassoSelection cross_validate_glasso(const Matrix& data, int grid_size, int folds,
                                      const SolverConfig& config, std::uint64_t seed, int jobs) {
  SampleCovariance s_full = sample_covariance(data);
  GlassoSelection sel;
  sel.lambda2_values = lambda2_grid(s_full, grid_size);
  std::vector<FoldData> fold_data = prepare_folds(data, folds, seed);

  const int n2 = static_cast<int>(sel.lambda2_values.size());
  std::vector<double> scores(static_cast<size_t>(n2) * folds, 0.0);
  parallel_for(n2 * folds, jobs, [&](int task) {
    const int j = task / folds;
    const int k = task % folds;
    TagLassoFit fit = fit_glasso(fold_data[k].s_train, sel.lambda2_values[j], config);
    scores[task] = neg_log_likelihood(fit.omega_pd, fold_data[k].s_out);
  });

  sel.cv_scores.resize(n2);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n2; ++j) {
    double sum = 0.0;
    for (int k = 0; k < folds; ++k) sum += scores[static_cast<size_t>(j) * folds + k];
    sel.cv_scores[j] = sum / folds;
    if (sel.cv_scores[j] < best) {
      best = sel.cv_scores[j];
      sel.chosen_j = j;
    }
  }
  sel.chosen_lambda2 = sel.lambda2_values[sel.chosen_j];
  return sel;
}

}  // namespace taglasso
