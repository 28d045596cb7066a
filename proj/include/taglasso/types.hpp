#ifndef TAGLASSO_TYPES_HPP
#define TAGLASSO_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace taglasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Regularization parameters of the penalized problem: lambda1 drives node
// aggregation (row-wise group penalty on the tree coefficients), lambda2
// drives edge sparsity (l1 on off-diagonal precision entries).
struct Penalties {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

// Staged ADMM configuration: rho1 is the initial penalty parameter, each of
// the t_stages stages runs maxit inner iterations and multiplies rho by
// rho_factor before the next stage.
struct SolverConfig {
  double rho1 = 0.01;
  int t_stages = 10;
  int maxit = 100;
  double rho_factor = 2.0;
  // Residual-based early exit between stages; off by default so the solver
  // runs the fixed iteration budget.
  bool early_exit = false;
  double early_exit_tol = 0.0;

  void validate() const {
    if (!(rho1 > 0.0)) throw std::invalid_argument("SolverConfig: rho1 must be > 0");
    if (t_stages < 1) throw std::invalid_argument("SolverConfig: t_stages must be >= 1");
    if (maxit < 1) throw std::invalid_argument("SolverConfig: maxit must be >= 1");
    if (!(rho_factor > 1.0)) throw std::invalid_argument("SolverConfig: rho_factor must be > 1");
  }
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct structure_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct design_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct selection_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct solver_divergence : std::runtime_error {
  int iteration;
  explicit solver_divergence(const std::string& msg, int iter)
      : std::runtime_error(msg), iteration(iter) {}
};

}  // namespace taglasso

#endif
