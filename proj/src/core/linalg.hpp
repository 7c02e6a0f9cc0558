#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "core/common.hpp"

namespace quasix::linalg {

/// Largest singular value of a small dense matrix.
double operator_norm(const MatrixXcd& m);

/// Largest singular value of an implicitly given operator, by Lanczos on A^dagger A
/// with full reorthogonalization. `apply` computes A x, `apply_adjoint` A^dagger x.
double operator_norm(const std::function<VectorXcd(const VectorXcd&)>& apply,
                     const std::function<VectorXcd(const VectorXcd&)>& apply_adjoint, Eigen::Index dim,
                     double rel_tol = 1e-12, int max_steps = 120);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with n nodes on [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

struct LanczosResult {
  VectorXd values;     ///< ascending Ritz values
  MatrixXcd vectors;   ///< Ritz vectors as columns (empty unless requested)
  VectorXd residuals;  ///< ||A v - theta v|| per returned pair
  int steps = 0;
};

/// Lowest `count` eigenpairs of a Hermitian operator by Lanczos with full
/// reorthogonalization. A single Krylov space returns one copy of each
/// degenerate eigenvalue.
LanczosResult lanczos_lowest(const std::function<VectorXcd(const VectorXcd&)>& apply, Eigen::Index dim, int count,
                             double tol = 1e-10, int max_steps = 400, bool want_vectors = false);

/// Hermitian residual max|M - M^dagger|.
double hermitian_residual(const MatrixXcd& m);

/// Groups sorted values into runs whose neighbours differ by at most tol; returns run lengths.
std::vector<int> degeneracy_runs(const std::vector<double>& sorted_values, double tol);

}  // namespace quasix::linalg
