#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "taglasso/fit_document.hpp"
#include "taglasso/io.hpp"
#include "taglasso/parallel.hpp"
#include "taglasso/refit.hpp"
#include "taglasso/simulation.hpp"

namespace {

using namespace taglasso;

constexpr int kExitBadInput = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitInfeasible = 4;

int env_default_jobs() {
  if (const char* env = std::getenv("TAGLASSO_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return default_jobs();
}

std::string timestamp_now() {
  // Honor SOURCE_DATE_EPOCH so pipelines can produce byte-stable artifacts.
  std::time_t t;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::atoll(env));
  } else {
    t = std::time(nullptr);
  }
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::vector<std::string> default_names(int p) {
  std::vector<std::string> names(p);
  for (int v = 0; v < p; ++v) names[v] = "V" + std::to_string(v + 1);
  return names;
}

struct FitOptions {
  std::string data_path;
  std::string cov_path;
  int cov_n = 0;
  std::string tree_path;
  std::string out_path;
  double lambda1 = -1.0;
  double lambda2 = -1.0;
  bool cv = false;
  int kmax = 0;
  int folds = 5;
  std::uint64_t seed = 1;
  SolverConfig config;
  int jobs = env_default_jobs();
};

int run_fit(const FitOptions& opt) {
  if (opt.data_path.empty() == opt.cov_path.empty()) {
    std::cerr << "fit: provide exactly one of --data or --cov\n";
    return kExitBadInput;
  }
  if (!opt.cv && (opt.lambda1 < 0.0 || opt.lambda2 < 0.0)) {
    std::cerr << "fit: provide --lambda1 and --lambda2, or --cv\n";
    return kExitBadInput;
  }
  if (opt.cv && opt.data_path.empty()) {
    std::cerr << "fit: --cv needs row-level data (--data), not a covariance matrix\n";
    return kExitBadInput;
  }

  Matrix data;
  SampleCovariance s;
  std::vector<std::string> names;
  std::string data_hash;
  if (!opt.data_path.empty()) {
    LoadedMatrix lm = load_matrix_csv(opt.data_path);
    data = lm.values;
    names = lm.names.empty() ? default_names(static_cast<int>(data.cols())) : lm.names;
    s = sample_covariance(data);
    s.names = names;
    data_hash = hash_file(opt.data_path);
  } else {
    LoadedMatrix lm = load_covariance_csv(opt.cov_path);
    if (opt.cov_n < 2) {
      std::cerr << "fit: --cov requires --n (sample size >= 2)\n";
      return kExitBadInput;
    }
    s.matrix = lm.values;
    s.n = opt.cov_n;
    names = lm.names.empty() ? default_names(s.dim()) : lm.names;
    s.names = names;
    data_hash = hash_file(opt.cov_path);
  }
  for (int col : s.zero_variance_cols) {
    std::cerr << "warning: column " << names[col] << " has zero variance\n";
  }

  AggregationTree tree;
  std::string tree_hash;
  if (opt.tree_path.empty()) {
    tree = star_tree(s.dim(), names);
  } else {
    tree = load_tree_csv(opt.tree_path, names);
    const auto violations = validate_tree(tree, names);
    if (!violations.empty()) {
      for (const auto& v : violations) std::cerr << opt.tree_path << ": " << v << "\n";
      return kExitBadInput;
    }
    tree_hash = hash_file(opt.tree_path);
  }

  Penalties penalties{opt.lambda1, opt.lambda2};
  if (opt.cv) {
    const LambdaGrid grid = lambda_grid(s, tree, 10, opt.config);
    const SelectionGrid sel =
        cross_validate(data, tree, grid, opt.folds, opt.config, opt.seed, opt.jobs);
    if (opt.kmax > 0) {
      const auto fits = grid_fits(s, tree, grid, opt.config, opt.jobs);
      const ConstrainedChoice choice = constrained_select(sel, fits, opt.kmax);
      penalties = {choice.lambda1, choice.lambda2};
    } else {
      penalties = {sel.chosen_lambda1, sel.chosen_lambda2};
    }
  }

  const TagLassoFit fit = la_admm(s, tree, penalties, opt.config);
  FitDocument doc =
      make_fit_document(fit, s, names, data_hash, tree_hash, opt.seed, timestamp_now());
  if (!opt.out_path.empty()) save_fit_document(opt.out_path, doc);

  std::printf("K=%d edges=%d lambda1=%s lambda2=%s residual=%s\n", fit.partition.k,
              fit.edge_count(), format_double(penalties.lambda1).c_str(),
              format_double(penalties.lambda2).c_str(), format_double(fit.residual()).c_str());
  return 0;
}

struct SimulateOptions {
  std::string design = "chain";
  int p = 15;
  int n = 120;
  int reps = 100;
  std::string estimators = "oracle,taglasso_ideal,taglasso_realistic,glasso";
  std::vector<int> sizes;
  int k = 0;
  int edges = 10;
  std::uint64_t seed = 1;
  std::string out_path;
  SolverConfig config;
  int jobs = env_default_jobs();
};

int run_simulate(const SimulateOptions& opt) {
  DesignSpec spec;
  spec.kind = design_kind_from_name(opt.design);
  spec.p = opt.p;
  spec.seed = opt.seed;
  spec.n_edges = opt.edges;
  if (!opt.sizes.empty()) {
    spec.block_sizes = opt.sizes;
  } else if (opt.k > 0) {
    spec.block_sizes.assign(opt.k, opt.p / opt.k);
    for (int i = 0; i < opt.p % opt.k; ++i) spec.block_sizes[i]++;
  }

  std::vector<Estimator> estimators;
  std::stringstream ss(opt.estimators);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) estimators.push_back(estimator_from_name(token));
  }
  if (estimators.empty()) {
    std::cerr << "simulate: no estimators requested\n";
    return kExitBadInput;
  }

  const StudyResult study =
      run_study(spec, opt.n, opt.reps, estimators, opt.config, opt.seed, opt.jobs);
  if (!opt.out_path.empty()) write_study_csv(opt.out_path, study.rows);

  // Per-estimator means with standard errors, one row per estimator.
  std::printf("%-22s %12s %12s %12s %12s %12s\n", "estimator", "KL", "RI", "ARI", "FPR", "FNR");
  for (Estimator est : estimators) {
    const std::string name = estimator_name(est);
    auto mean_se = [&](auto getter, bool* any = nullptr) -> std::pair<double, double> {
      double sum = 0.0, sumsq = 0.0;
      int count = 0;
      for (const auto& row : study.rows) {
        if (row.estimator != name || row.failed) continue;
        const auto v = getter(row);
        if (!v.has_value()) continue;
        sum += *v;
        sumsq += *v * *v;
        count++;
      }
      if (any) *any = count > 0;
      if (count == 0) return {0.0, 0.0};
      const double mean = sum / count;
      const double var = count > 1 ? (sumsq - count * mean * mean) / (count - 1) : 0.0;
      return {mean, std::sqrt(std::max(var, 0.0) / count)};
    };
    auto fmt = [](std::pair<double, double> ms, bool defined) {
      char buf[32];
      if (!defined) return std::string("NA");
      std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", ms.first, ms.second);
      return std::string(buf);
    };
    const auto kl = mean_se([](const StudyRow& r) { return std::optional<double>(r.kl); });
    const auto ri = mean_se([](const StudyRow& r) { return std::optional<double>(r.ri); });
    bool any_ari = false;
    const auto ari = mean_se(
        [](const StudyRow& r) {
          return r.ari_defined ? std::optional<double>(r.ari) : std::nullopt;
        },
        &any_ari);
    const auto fpr = mean_se([](const StudyRow& r) { return std::optional<double>(r.fpr); });
    const auto fnr = mean_se([](const StudyRow& r) { return std::optional<double>(r.fnr); });
    std::printf("%-22s %12s %12s %12s %12s %12s\n", name.c_str(), fmt(kl, true).c_str(),
                fmt(ri, true).c_str(), fmt(ari, any_ari).c_str(), fmt(fpr, true).c_str(),
                fmt(fnr, true).c_str());
  }
  for (const auto& row : study.rows) {
    if (row.failed) {
      std::fprintf(stderr, "rep %d %s failed: %s\n", row.rep, row.estimator.c_str(),
                   row.error.c_str());
    }
  }
  return 0;
}

struct ExportOptions {
  std::string fit_path;
  std::string out_prefix;
  double ctol = 1e-6;
};

int run_export_dot(const ExportOptions& opt) {
  const FitDocument doc = load_fit_document(opt.fit_path);
  const std::string prefix = opt.out_prefix.empty() ? opt.fit_path : opt.out_prefix;
  write_file(prefix + ".full.dot", dot_full_graph(doc));
  write_file(prefix + ".aggregated.dot", dot_aggregated_graph(doc, opt.ctol));
  std::printf("wrote %s.full.dot and %s.aggregated.dot\n", prefix.c_str(), prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tag-lasso: tree-aggregated graphical lasso"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  CLI::App* fit = app.add_subcommand("fit", "fit a tag-lasso model to data");
  fit->add_option("--data", fit_opt.data_path, "n x p data matrix CSV");
  fit->add_option("--cov", fit_opt.cov_path, "p x p covariance matrix CSV");
  fit->add_option("--n", fit_opt.cov_n, "sample size behind --cov");
  fit->add_option("--tree", fit_opt.tree_path, "tree CSV (node_id,parent_id,label); omit for glasso");
  fit->add_option("--lambda1", fit_opt.lambda1, "aggregation penalty");
  fit->add_option("--lambda2", fit_opt.lambda2, "sparsity penalty");
  fit->add_flag("--cv", fit_opt.cv, "select penalties by 5-fold cross-validation");
  fit->add_option("--kmax", fit_opt.kmax, "constrain CV choice to cells with K <= kmax");
  fit->add_option("--folds", fit_opt.folds, "CV fold count")->capture_default_str();
  fit->add_option("--seed", fit_opt.seed, "random seed")->capture_default_str();
  fit->add_option("--out", fit_opt.out_path, "output fit document (JSON)");
  fit->add_option("--rho1", fit_opt.config.rho1, "initial ADMM penalty")->capture_default_str();
  fit->add_option("--stages", fit_opt.config.t_stages, "number of rho stages")->capture_default_str();
  fit->add_option("--maxit", fit_opt.config.maxit, "iterations per stage")->capture_default_str();
  fit->add_option("--jobs", fit_opt.jobs, "worker threads")->capture_default_str();

  SimulateOptions sim_opt;
  CLI::App* sim = app.add_subcommand("simulate", "run a replicated benchmark study");
  sim->add_option("--design", sim_opt.design, "chain|random|unbalanced|unstructured")->capture_default_str();
  sim->add_option("--p", sim_opt.p, "variable count")->capture_default_str();
  sim->add_option("--n", sim_opt.n, "sample size")->capture_default_str();
  sim->add_option("--reps", sim_opt.reps, "replications")->capture_default_str();
  sim->add_option("--estimators", sim_opt.estimators, "comma-separated estimator list")->capture_default_str();
  sim->add_option("--sizes", sim_opt.sizes, "block sizes (override design default)");
  sim->add_option("--k", sim_opt.k, "block count (near-equal sizes)");
  sim->add_option("--edges", sim_opt.edges, "edge count for the unstructured design")->capture_default_str();
  sim->add_option("--seed", sim_opt.seed, "random seed")->capture_default_str();
  sim->add_option("--out", sim_opt.out_path, "metrics CSV path");
  sim->add_option("--rho1", sim_opt.config.rho1, "initial ADMM penalty")->capture_default_str();
  sim->add_option("--stages", sim_opt.config.t_stages, "number of rho stages")->capture_default_str();
  sim->add_option("--maxit", sim_opt.config.maxit, "iterations per stage")->capture_default_str();
  sim->add_option("--jobs", sim_opt.jobs, "worker threads")->capture_default_str();

  ExportOptions exp_opt;
  CLI::App* exp = app.add_subcommand("export-dot", "render a fit document as DOT graphs");
  exp->add_option("fit", exp_opt.fit_path, "fit document path")->required();
  exp->add_option("--out", exp_opt.out_prefix, "output path prefix");
  exp->add_option("--ctol", exp_opt.ctol, "aggregated-edge threshold on |c_ij|")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) return run_fit(fit_opt);
    if (*sim) return run_simulate(sim_opt);
    if (*exp) return run_export_dot(exp_opt);
  } catch (const solver_divergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const selection_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const design_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const structure_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
