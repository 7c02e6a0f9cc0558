#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library routines they are compared against.

#include <functional>
#include <vector>

#include "core/common.hpp"
#include "core/models.hpp"
#include "core/mps.hpp"

namespace oracle {

using quasix::cplx;
using quasix::MatrixXcd;
using quasix::MatrixXd;
using quasix::VectorXcd;
using quasix::VectorXd;

/// Dense H on the ring built entry by entry from the generating terms.
MatrixXcd dense_hamiltonian(const quasix::models::LocalHamiltonian& h);

/// Dense translation: moves the content of site x to site x+1.
MatrixXcd dense_translation(int sites, int d);

/// Eigenvalues of H restricted to the eigenspace T = e^{-ip}, p = 2 pi k / N,
/// obtained by projecting with (1/N) sum_j e^{ipj} T^j.
VectorXd sector_eigenvalues(const MatrixXcd& h, const MatrixXcd& translation, int k);

/// Transverse-field Ising ring -sum zz - g sum x by Jordan-Wigner.
struct FreeFermionTfim {
  int sites;
  double g;
  double mode_energy(double k) const;  ///< 2 sqrt(1 + g^2 - 2 g cos k)
  double even_vacuum() const;          ///< ground energy (antiperiodic modes)
  double odd_vacuum() const;           ///< -sum over periodic modes of eps/2
  /// Lowest energy with total momentum p = 2 pi k / N in the odd-parity sector,
  /// measured from the ground energy (a single magnon on top of the odd vacuum).
  double single_magnon(int k) const;
};

/// (1/d^{|comp|}) sum over complement configurations, by explicit loops over digits.
MatrixXcd brute_partial_trace(const MatrixXcd& full, const std::vector<int>& region_sites, int sites, int d);

/// sum_{n < terms} (e^{ip} Et)^n (b - r tr(l b)) with Et(X) = sum_s A X A^dagger - r tr(l X).
MatrixXcd power_series_resolvent(const quasix::mps::MpsTensor& t, const MatrixXcd& l, const MatrixXcd& r, double p,
                                 const MatrixXcd& b, int terms = 200);

/// <Phi_p[B']|Phi_p[B]> and <Phi_p[B']|H|Phi_p[B]> per site, by contracting
/// finite windows between the exact boundary fixed points. Offsets run over
/// |m| <= reach and bond terms over `reach` sites beyond either block.
struct WindowElements {
  cplx norm;
  cplx energy;
};
WindowElements window_elements(const quasix::mps::MpsTensor& t, const MatrixXcd& l, const MatrixXcd& r,
                               const MatrixXcd& bond_term, int ell, const VectorXcd& bra, const VectorXcd& ket,
                               double p, int reach = 30);

/// Adaptive quadrature of (2 pi q)^{-1/2} int_{-T}^{T} cos(w t) exp(-t^2 / 2q) dt.
double filter_kernel_quadrature(double omega, double q, double time);

}  // namespace oracle
