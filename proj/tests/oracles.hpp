#ifndef TAGLASSO_TEST_ORACLES_HPP
#define TAGLASSO_TEST_ORACLES_HPP

// Independent oracles used to freeze expected values. Everything here is
// deliberately naive (cofactor expansions, exhaustive pair loops, grid
// refinement) and shares no code with the implementation paths it checks.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "taglasso/types.hpp"

namespace oracles {

using taglasso::Matrix;
using taglasso::Vector;

// Determinant by recursive cofactor expansion; fine up to p ~ 8.
inline double cofactor_det(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (int c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int mc = 0;
      for (int cc = 0; cc < n; ++cc) {
        if (cc == c) continue;
        minor(r - 1, mc++) = m(r, cc);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * m(0, c) * cofactor_det(minor);
  }
  return det;
}

// Covariance by the textbook double loop over variable pairs.
inline Matrix brute_force_covariance(const Matrix& data) {
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  std::vector<double> means(p, 0.0);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) means[j] += data(i, j);
    means[j] /= n;
  }
  Matrix s(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += (data(i, a) - means[a]) * (data(i, b) - means[b]);
      s(a, b) = acc / n;
    }
  }
  return s;
}

// 1-D proximal minimization of 0.5 * rho * (x - t)^2 + lambda * |x| by grid
// refinement.
inline double prox_abs_grid(double t, double rho, double lambda, double tol = 1e-8) {
  double lo = -std::abs(t) - 1.0;
  double hi = std::abs(t) + 1.0;
  auto f = [&](double x) { return 0.5 * rho * (x - t) * (x - t) + lambda * std::abs(x); };
  for (int round = 0; round < 64 && hi - lo > tol; ++round) {
    const int grid = 200;
    double best_x = lo, best_f = f(lo);
    for (int g = 0; g <= grid; ++g) {
      const double x = lo + (hi - lo) * g / grid;
      const double v = f(x);
      if (v < best_f) {
        best_f = v;
        best_x = x;
      }
    }
    const double step = (hi - lo) / grid;
    lo = best_x - step;
    hi = best_x + step;
  }
  return (lo + hi) / 2.0;
}

// Row-level group prox 0.5 * rho * ||v - t||^2 + lambda * ||v||_2 reduced to
// the radial scalar and solved by grid refinement.
inline Vector prox_group_grid(const Vector& t, double rho, double lambda, double tol = 1e-10) {
  const double tnorm = t.norm();
  if (tnorm == 0.0) return Vector::Zero(t.size());
  auto f = [&](double s) {
    return 0.5 * rho * (s - tnorm) * (s - tnorm) + lambda * std::abs(s);
  };
  double lo = 0.0, hi = tnorm * 1.5 + 1.0;
  for (int round = 0; round < 64 && hi - lo > tol; ++round) {
    const int grid = 200;
    double best_x = lo, best_f = f(lo);
    for (int g = 0; g <= grid; ++g) {
      const double x = lo + (hi - lo) * g / grid;
      const double v = f(x);
      if (v < best_f) {
        best_f = v;
        best_x = x;
      }
    }
    const double step = (hi - lo) / grid;
    lo = std::max(0.0, best_x - step);
    hi = best_x + step;
  }
  const double s = (lo + hi) / 2.0;
  return (s / tnorm) * t;
}

// Generic constrained quadratic oracle for the structured update: minimizes
// || Atilde G + Dtilde - Mtilde ||_F^2 over G and diagonal d >= 0. For fixed
// d the inner solve is a generic least squares; each d_j is then refined by a
// 1-D scan (the profiled objective is separable across coordinates).
struct StructuredOracle {
  Matrix gamma;
  Vector d;
};

inline StructuredOracle structured_kkt_oracle(const Matrix& a, const Matrix& target_omega,
                                              const Matrix& target_gamma) {
  const int p = static_cast<int>(a.rows());
  const int t = static_cast<int>(a.cols());
  Matrix atilde(p + t, t);
  atilde.topRows(p) = a;
  atilde.bottomRows(t) = Matrix::Identity(t, t);
  Matrix mtilde(p + t, p);
  mtilde.topRows(p) = target_omega;
  mtilde.bottomRows(t) = target_gamma;

  auto objective_profile = [&](const Vector& d) {
    Matrix md = mtilde;
    for (int j = 0; j < p; ++j) md(j, j) -= d(j);
    Matrix g = atilde.colPivHouseholderQr().solve(md);
    return (atilde * g - md).squaredNorm();
  };

  Vector d = Vector::Zero(p);
  // The profiled objective is an exact quadratic in each coordinate, so a
  // coarse scan to bracket followed by a three-point parabola gives the
  // vertex to roundoff; the constraint d >= 0 is a clamp. One sweep per
  // coordinate suffices (separable); a second sweep verifies stability.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int j = 0; j < p; ++j) {
      const double hi = 2.0 * std::abs(target_omega(j, j)) + 5.0;
      const int grid = 64;
      double best_x = 0.0;
      double best_f = std::numeric_limits<double>::infinity();
      for (int g = 0; g <= grid; ++g) {
        const double x = hi * g / grid;
        Vector trial = d;
        trial(j) = x;
        const double v = objective_profile(trial);
        if (v < best_f) {
          best_f = v;
          best_x = x;
        }
      }
      const double h = hi / grid;
      Vector t0 = d, t1 = d, t2 = d;
      t0(j) = best_x;
      t1(j) = best_x + h;
      t2(j) = best_x + 2.0 * h;
      const double f0 = objective_profile(t0);
      const double f1 = objective_profile(t1);
      const double f2 = objective_profile(t2);
      const double curvature = (f2 - 2.0 * f1 + f0) / (h * h);
      double x_star = best_x;
      if (curvature > 0.0) {
        x_star = best_x + h * (0.5 - (f1 - f0) / (curvature * h * h));
      }
      d(j) = std::max(0.0, x_star);
    }
  }

  Matrix md = mtilde;
  for (int j = 0; j < p; ++j) md(j, j) -= d(j);
  StructuredOracle out;
  out.gamma = atilde.colPivHouseholderQr().solve(md);
  out.d = d;
  return out;
}

inline Matrix random_symmetric(int p, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      const double v = normal(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

inline Matrix random_spd(int p, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix b(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) b(i, j) = normal(rng);
  }
  Matrix s = b * b.transpose() / p;
  s.diagonal().array() += ridge;
  return s;
}

}  // namespace oracles

#endif
