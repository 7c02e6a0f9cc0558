#pragma once

#include <optional>
#include <vector>

#include "core/common.hpp"
#include "core/ed.hpp"
#include "core/linalg.hpp"
#include "core/models.hpp"

namespace quasix::filter {

/// Parameter choices of the filter construction for one block radius ell.
struct FilterSchedule {
  int ell = 0;
  double delta_e = 0.0;  ///< isolation gap of the target inside its sector
  double mu = 0.0;
  double s = 0.0;
  double v_lr = 0.0;
  double time = 0.0;  ///< T = ell / v_LR
  double q = 0.0;     ///< q = T / delta_e
  double c = 1.0;
};

/// T = ell/v_LR, q = T/dE with v_LR = (dE/2 + 2s)/mu.
FilterSchedule make_schedule(int ell, double delta_e, double mu, double s, double c = 1.0);

/// Gaussian filter factor exp(-q w^2 / 2).
double gaussian_factor(double omega, double q);

/// (2 pi q)^{-1/2} int_{-T}^{T} cos(w t) exp(-t^2/2q) dt by Gauss-Legendre quadrature.
class TruncatedKernel {
 public:
  TruncatedKernel(double q, double time, int nodes);
  double operator()(double omega) const;
  int nodes() const { return static_cast<int>(rule_.nodes.size()); }
  double q() const { return q_; }
  double time() const { return time_; }
  /// Nodes t_k and weights w_k exp(-t_k^2/2q)/sqrt(2 pi q).
  const std::vector<double>& times() const { return rule_.nodes; }
  const std::vector<double>& amplitudes() const { return amplitudes_; }

 private:
  double q_;
  double time_;
  linalg::QuadratureRule rule_;
  std::vector<double> amplitudes_;
};

/// Kernel with max(64, ceil(4 T (Emax - Emin)/pi)) nodes, doubled until the
/// values over |w| <= max_abs_omega change by at most `tol`; the finer rule is returned.
TruncatedKernel make_truncated_kernel(double q, double time, double energy_spread, double max_abs_omega,
                                      double tol = 1e-9);

/// Energy-filter computations for one operator on a fully diagonalized chain.
/// Operators are held in the real energy eigenbasis; the Hamiltonian and the
/// operator must both be real.
class FilterLab {
 public:
  FilterLab(const ed::ChainSpectrum& spectrum, const ed::RealEigenbasis& basis, const ed::RegionOperator& op);

  const ed::ChainSpectrum& spectrum() const { return *spectrum_; }
  const ed::RealEigenbasis& basis() const { return *basis_; }
  const ed::RegionOperator& op() const { return op_; }
  /// O - <O> in the eigenbasis.
  const MatrixXd& op_eigen() const { return op_eigen_; }
  /// ||O - <O>||.
  double op_norm() const { return op_norm_; }
  Eigen::Index ground_column() const { return ground_; }
  /// Ground state as represented by the real eigenbasis.
  VectorXcd ground() const;

  /// O1 in the eigenbasis: element (r, c) scaled by exp(-q (E_t - E_r + E_c)^2 / 2).
  MatrixXd gaussian_filter(double e_target, double q) const;
  /// O2 in the eigenbasis with the truncated kernel.
  MatrixXd truncated_filter(double e_target, const TruncatedKernel& kernel) const;
  TruncatedKernel kernel_for(double e_target, double q, double time) const;

  /// Phi_p of an eigenbasis operator (only its ground column is used).
  VectorXcd momentum_state(const MatrixXd& op_eig, const ed::MomentumSector& sector) const;
  /// Phi_p of a region operator.
  VectorXcd momentum_state(const ed::RegionOperator& local, const ed::MomentumSector& sector) const;

  /// V M V^T.
  MatrixXd to_product_basis(const MatrixXd& op_eig) const;

 private:
  const ed::ChainSpectrum* spectrum_;
  const ed::RealEigenbasis* basis_;
  ed::RegionOperator op_;
  MatrixXd op_eigen_;
  double op_norm_ = 0.0;
  Eigen::Index ground_ = 0;
};

/// (sum_{beta != alpha} |<Psi_beta|Phi>|^2)^{1/2} over the full sector basis.
double seminorm_prime(const VectorXcd& phi, int alpha, const ed::EigenSector& sector);

/// |<Psi_alpha|Phi_p[O]>| / ||O||.
double spectral_weight(const VectorXcd& phi, int alpha, const ed::EigenSector& sector, double op_norm);

/// C(Y) = sqrt(diam Y + |Y| / delta).
double cluster_constant(const models::Region& y, double delta);

/// D_X(ell) = |X| C(B_{ell+1}(X)) / (s mu sqrt(2 pi q)), prefactor 1.
double localization_prefactor(const models::Region& x, int ell, double delta, const FilterSchedule& schedule);

struct TheoremBound {
  double value = 0.0;         ///< lower bound on F, 0 when undefined
  double factor = 0.0;        ///< (c + D/f) exp(-dE ell / 2 v_LR)
  bool defined = false;       ///< factor < 1
  bool beyond_ell0 = false;   ///< factor <= 1/2
};

TheoremBound theorem_bound(int ell, double f, double delta_e, double v_lr, double d_x, double c);

/// Smallest ell with (c + D_X(ell)/f) exp(-dE ell / 2 v_LR) <= 1/2, if any up to max_ell.
std::optional<int> ell_zero(const models::Region& x, double f, double delta_e, double gap, double mu, double s,
                            double c, int max_ell = 100000);

struct FidelityReport {
  int ell = 0;
  double time = 0.0;
  double q = 0.0;
  double overlap = 0.0;
  double norm = 0.0;
  double seminorm = 0.0;
  double fidelity = 0.0;
  double bound = 0.0;
  double weight = 0.0;  ///< f
  double d_x = 0.0;
  double localization_error = 0.0;  ///< ||O^(ell) - O2||
  double localization_bound = 0.0;
  double fidelity_o2 = 0.0;         ///< F of O2 before localization
  int quadrature_nodes = 0;
  bool bound_defined = false;
  bool beyond_ell0 = false;
  bool bound_violated = false;
};

struct PipelineOptions {
  int momentum_index = 0;
  int alpha = 0;
  int ell_max = 5;
  double mu = 1.0;
  double c = 1.0;
  double delta_e_scale = 1.0;  ///< multiplies the measured isolation gap (sanity inversion runs)
};

struct PipelineResult {
  std::vector<FidelityReport> rows;
  double delta_e = 0.0;      ///< as used in the schedule
  double gap = 0.0;          ///< Delta E
  double s = 0.0;
  double v_lr = 0.0;
  double weight = 0.0;
  double baseline_fidelity = 0.0;  ///< F of the unfiltered operator
  std::optional<int> ell0;
  double target_energy = 0.0;
  bool fidelity_nondecreasing = false;
  double decay_rate = 0.0;  ///< least-squares slope of -log(1 - F) per site
};

/// O -> O1/O2 -> O^(ell) for ell = 1..ell_max on the chain.
PipelineResult run_filter_pipeline(const models::LocalHamiltonian& h, const ed::ChainSpectrum& spectrum,
                                   const ed::RealEigenbasis& basis, const ed::RegionOperator& op,
                                   const PipelineOptions& options);

}  // namespace quasix::filter
