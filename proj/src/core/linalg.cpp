#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gsl/gsl_integration.h>

namespace quasix::linalg {

double operator_norm(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

double operator_norm(const std::function<VectorXcd(const VectorXcd&)>& apply,
                     const std::function<VectorXcd(const VectorXcd&)>& apply_adjoint, Eigen::Index dim,
                     double rel_tol, int max_steps) {
  if (dim == 0) return 0.0;
  const int m_max = static_cast<int>(std::min<Eigen::Index>(dim, max_steps));
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  v.normalize();

  std::vector<VectorXcd> basis;
  std::vector<double> alpha, beta;
  double previous = -1.0;
  double estimate = 0.0;
  for (int j = 0; j < m_max; ++j) {
    basis.push_back(v);
    VectorXcd w = apply_adjoint(apply(v));
    const double a = v.dot(w).real();
    alpha.push_back(a);
    for (const auto& q : basis) w -= q * q.dot(w);
    for (const auto& q : basis) w -= q * q.dot(w);
    const double b = w.norm();

    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    estimate = std::max(0.0, es.eigenvalues()(k - 1));
    const double ritz_residual = b * std::abs(es.eigenvectors()(k - 1, k - 1));
    if (b < 1e-14 * std::max(1.0, estimate)) break;
    if (ritz_residual <= rel_tol * std::max(estimate, 1e-300) && std::abs(estimate - previous) <= rel_tol * estimate)
      break;
    previous = estimate;
    beta.push_back(b);
    v = w / b;
  }
  return std::sqrt(estimate);
}

LanczosResult lanczos_lowest(const std::function<VectorXcd(const VectorXcd&)>& apply, Eigen::Index dim, int count,
                             double tol, int max_steps, bool want_vectors) {
  if (dim <= 0 || count <= 0) throw_invalid("lanczos_lowest: empty problem");
  count = static_cast<int>(std::min<Eigen::Index>(count, dim));
  const int m_max = static_cast<int>(std::min<Eigen::Index>(dim, max_steps));
  std::mt19937_64 rng(0x1a2c05);
  std::normal_distribution<double> gauss;
  VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  v.normalize();

  std::vector<VectorXcd> basis;
  std::vector<double> alpha, beta;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  double last_b = 0.0;
  bool converged = false;
  for (int j = 0; j < m_max; ++j) {
    basis.push_back(v);
    VectorXcd w = apply(v);
    alpha.push_back(v.dot(w).real());
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) w -= q * q.dot(w);
    last_b = w.norm();

    const int k = static_cast<int>(alpha.size());
    MatrixXd t = MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    es.compute(t);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (last_b < 1e-13 * scale) {
      converged = true;
      break;
    }
    if (k >= count) {
      bool ok = true;
      for (int i = 0; i < count && ok; ++i) ok = last_b * std::abs(es.eigenvectors()(k - 1, i)) <= tol * scale;
      if (ok) {
        converged = true;
        break;
      }
    }
    beta.push_back(last_b);
    v = w / last_b;
  }
  const int k = static_cast<int>(alpha.size());
  count = std::min(count, k);
  if (!converged) throw_not_converged("lanczos_lowest: no convergence within " + std::to_string(m_max) + " steps");

  LanczosResult out;
  out.steps = k;
  out.values = es.eigenvalues().head(count);
  out.residuals.resize(count);
  for (int i = 0; i < count; ++i) out.residuals(i) = last_b * std::abs(es.eigenvectors()(k - 1, i));
  if (want_vectors) {
    out.vectors = MatrixXcd::Zero(dim, count);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < count; ++i) out.vectors.col(i) += es.eigenvectors()(j, i) * basis[j];
    for (int i = 0; i < count; ++i) {
      out.vectors.col(i).normalize();
      out.residuals(i) = (apply(out.vectors.col(i)) - out.values(i) * out.vectors.col(i)).norm();
    }
  }
  return out;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw_invalid("gauss_legendre: node count must be positive");
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
  if (table == nullptr) throw_numerical("gauss_legendre: table allocation failed");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i)
    gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &rule.nodes[i], &rule.weights[i], table);
  gsl_integration_glfixed_table_free(table);
  return rule;
}

double hermitian_residual(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

std::vector<int> degeneracy_runs(const std::vector<double>& sorted_values, double tol) {
  std::vector<int> runs;
  for (std::size_t i = 0; i < sorted_values.size(); ++i) {
    if (i > 0 && sorted_values[i] - sorted_values[i - 1] <= tol)
      ++runs.back();
    else
      runs.push_back(1);
  }
  return runs;
}

}  // namespace quasix::linalg
