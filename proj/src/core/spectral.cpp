#include "core/spectral.hpp"

#include <cmath>

namespace quasix::spectral {

std::vector<Residue> peak_weights(const VectorXcd& phi, const ed::EigenSector& sector) {
  if (!sector.full) throw_invalid("peak_weights: needs the full sector basis");
  if (phi.size() != sector.vectors.rows()) throw_invalid("peak_weights: state does not match the sector");
  const VectorXcd amps = sector.vectors.adjoint() * phi;
  std::vector<Residue> out(amps.size());
  for (Eigen::Index a = 0; a < amps.size(); ++a) out[a] = {sector.energies(a), std::norm(amps(a))};
  return out;
}

SpectralLine dynamic_correlation(const VectorXcd& phi, const ed::EigenSector& sector,
                                 const std::vector<double>& omega, double eps) {
  if (!(eps > 0.0)) throw_invalid("dynamic_correlation: broadening must be positive");
  const auto residues = peak_weights(phi, sector);
  SpectralLine line;
  line.momentum = sector.momentum;
  line.broadening = eps;
  line.omega = omega;
  line.correlation.resize(omega.size());
  line.spectrum.resize(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    cplx acc = 0.0;
    for (const auto& r : residues) acc += r.weight / cplx(omega[i] - r.energy, eps);
    line.correlation[i] = acc;
    line.spectrum[i] = -acc.imag() / kPi;
  }
  return line;
}

std::vector<double> default_grid(double gap, double e_max, int points) {
  if (points < 2) throw_invalid("default_grid: need at least two points");
  std::vector<double> out(points);
  const double lo = -gap, hi = e_max + gap;
  for (int i = 0; i < points; ++i) out[i] = lo + (hi - lo) * i / (points - 1);
  return out;
}

double default_broadening(double gap) { return 0.02 * gap; }

double integrated_weight(const SpectralLine& line) {
  double acc = 0.0;
  for (std::size_t i = 1; i < line.omega.size(); ++i)
    acc += 0.5 * (line.spectrum[i] + line.spectrum[i - 1]) * (line.omega[i] - line.omega[i - 1]);
  return acc;
}

double kramers_kronig_residual(const SpectralLine& line, double interior) {
  const std::size_t n = line.omega.size();
  if (n < 5) throw_invalid("kramers_kronig_residual: grid too small");
  std::vector<double> im(n);
  for (std::size_t i = 0; i < n; ++i) im[i] = line.correlation[i].imag();
  const double a = line.omega.front(), b = line.omega.back();
  const auto margin = static_cast<std::size_t>(0.5 * (1.0 - interior) * n);

  double num = 0.0, den = 0.0;
  for (std::size_t i = std::max<std::size_t>(margin, 1); i + std::max<std::size_t>(margin, 1) < n; ++i) {
    const double w = line.omega[i];
    // P int f(x)/(x-w) dx = int (f(x)-f(w))/(x-w) dx + f(w) log((b-w)/(w-a)).
    const double slope = (im[i + 1] - im[i - 1]) / (line.omega[i + 1] - line.omega[i - 1]);
    auto g = [&](std::size_t j) { return j == i ? slope : (im[j] - im[i]) / (line.omega[j] - w); };
    double integral = 0.0;
    for (std::size_t j = 1; j < n; ++j) integral += 0.5 * (g(j) + g(j - 1)) * (line.omega[j] - line.omega[j - 1]);
    integral += im[i] * std::log((b - w) / (w - a));
    const double re_kk = integral / kPi;
    const double re = line.correlation[i].real();
    num += (re_kk - re) * (re_kk - re);
    den += re * re;
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace quasix::spectral
