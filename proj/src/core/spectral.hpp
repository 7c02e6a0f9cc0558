#pragma once

#include <vector>

#include "core/common.hpp"
#include "core/ed.hpp"

namespace quasix::spectral {

struct SpectralLine {
  double momentum = 0.0;
  double broadening = 0.0;
  std::vector<double> omega;
  std::vector<cplx> correlation;  ///< D(p, w)
  std::vector<double> spectrum;   ///< S(p, w) = -Im D / pi
};

struct Residue {
  double energy = 0.0;
  double weight = 0.0;
};

/// Exact pole strengths |<Psi_{p,a}|Phi_p[O]>|^2 for every level of the sector.
std::vector<Residue> peak_weights(const VectorXcd& phi, const ed::EigenSector& sector);

/// D(p, w) = sum_a weight_a / (w - E_a + i eps).
SpectralLine dynamic_correlation(const VectorXcd& phi, const ed::EigenSector& sector,
                                 const std::vector<double>& omega, double eps);

/// Uniform grid of `points` frequencies over [-gap, e_max + gap].
std::vector<double> default_grid(double gap, double e_max, int points = 2001);
/// 0.02 * gap.
double default_broadening(double gap);

/// Trapezoid integral of S over the grid.
double integrated_weight(const SpectralLine& line);

/// Relative L2 mismatch between Re D and the principal-value Hilbert transform
/// of Im D, over the inner `interior` fraction of the grid.
double kramers_kronig_residual(const SpectralLine& line, double interior = 0.5);

}  // namespace quasix::spectral
