#include "core/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace quasix::filter {

FilterSchedule make_schedule(int ell, double delta_e, double mu, double s, double c) {
  if (ell < 1) throw_invalid("make_schedule: ell must be at least 1");
  if (!(delta_e > 0.0)) throw_invalid("make_schedule: isolation gap must be positive");
  FilterSchedule out;
  out.ell = ell;
  out.delta_e = delta_e;
  out.mu = mu;
  out.s = s;
  out.c = c;
  out.v_lr = models::lr_velocity(delta_e, s, mu);
  out.time = ell / out.v_lr;
  out.q = out.time / delta_e;
  return out;
}

double gaussian_factor(double omega, double q) {
  if (q < 0.0) throw_invalid("gaussian_factor: q must be non-negative");
  return std::exp(-0.5 * q * omega * omega);
}

TruncatedKernel::TruncatedKernel(double q, double time, int nodes)
    : q_(q), time_(time), rule_(linalg::gauss_legendre(nodes, -time, time)) {
  if (!(q > 0.0) || !(time > 0.0)) throw_invalid("TruncatedKernel: q and T must be positive");
  const double norm = 1.0 / std::sqrt(2.0 * kPi * q);
  amplitudes_.resize(rule_.nodes.size());
  for (std::size_t k = 0; k < amplitudes_.size(); ++k)
    amplitudes_[k] = rule_.weights[k] * std::exp(-rule_.nodes[k] * rule_.nodes[k] / (2.0 * q)) * norm;
}

double TruncatedKernel::operator()(double omega) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < amplitudes_.size(); ++k) acc += amplitudes_[k] * std::cos(omega * rule_.nodes[k]);
  return acc;
}

TruncatedKernel make_truncated_kernel(double q, double time, double energy_spread, double max_abs_omega, double tol) {
  int nodes = std::max(64, static_cast<int>(std::ceil(4.0 * time * energy_spread / kPi)));
  constexpr int samples = 1025;
  auto values = [&](const TruncatedKernel& k) {
    std::vector<double> v(samples);
    for (int i = 0; i < samples; ++i) v[i] = k(max_abs_omega * i / (samples - 1));
    return v;
  };
  TruncatedKernel current(q, time, nodes);
  auto current_values = values(current);
  for (int round = 0; round < 10; ++round) {
    TruncatedKernel refined(q, time, 2 * nodes);
    const auto refined_values = values(refined);
    double change = 0.0;
    for (int i = 0; i < samples; ++i) change = std::max(change, std::abs(refined_values[i] - current_values[i]));
    if (change <= tol) return refined;
    nodes *= 2;
    current = std::move(refined);
    current_values = refined_values;
  }
  throw_not_converged("truncated filter quadrature is under-resolved after node doubling");
}

FilterLab::FilterLab(const ed::ChainSpectrum& spectrum, const ed::RealEigenbasis& basis, const ed::RegionOperator& op)
    : spectrum_(&spectrum), basis_(&basis), op_(op) {
  if (op.matrix.imag().cwiseAbs().maxCoeff() > 0.0) throw_invalid("FilterLab: the operator must be real");
  const MatrixXd& v = basis.vectors;
  const int d = spectrum.table->local_dim();
  basis.energies.minCoeff(&ground_);

  MatrixXd ov(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) ov.col(j) = ed::apply_region_operator<VectorXd>(op, v.col(j), d);
  op_eigen_.noalias() = v.transpose() * ov;
  const double expectation = op_eigen_(ground_, ground_);
  op_eigen_.diagonal().array() -= expectation;
  const MatrixXcd centered = op.matrix - expectation * MatrixXcd::Identity(op.matrix.rows(), op.matrix.cols());
  op_norm_ = linalg::operator_norm(centered);
}

VectorXcd FilterLab::ground() const { return basis_->vectors.col(ground_).cast<cplx>(); }

MatrixXd FilterLab::gaussian_filter(double e_target, double q) const {
  if (q < 0.0) throw_invalid("gaussian_filter: q must be non-negative");
  const VectorXd& e = basis_->energies;
  MatrixXd out(op_eigen_.rows(), op_eigen_.cols());
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      out(r, c) = op_eigen_(r, c) * gaussian_factor(e_target - e(r) + e(c), q);
  return out;
}

TruncatedKernel FilterLab::kernel_for(double e_target, double q, double time) const {
  const VectorXd& e = basis_->energies;
  const double spread = e.maxCoeff() - e.minCoeff();
  const double max_abs = std::abs(e_target) + spread;
  return make_truncated_kernel(q, time, spread, max_abs);
}

MatrixXd FilterLab::truncated_filter(double e_target, const TruncatedKernel& kernel) const {
  // cos((E_t - E_r + E_c) t) = cos(u_r t) cos(E_c t) - sin(u_r t) sin(E_c t) turns the
  // kernel matrix into one product with inner dimension 2K.
  const VectorXd& e = basis_->energies;
  const Eigen::Index n = e.size();
  const int k = kernel.nodes();
  MatrixXd left(n, 2 * k), right(n, 2 * k);
  for (int j = 0; j < k; ++j) {
    const double t = kernel.times()[j];
    const double a = kernel.amplitudes()[j];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (e_target - e(i)) * t;
      left(i, j) = a * std::cos(u);
      left(i, k + j) = -a * std::sin(u);
      right(i, j) = std::cos(e(i) * t);
      right(i, k + j) = std::sin(e(i) * t);
    }
  }
  MatrixXd out;
  out.noalias() = left * right.transpose();
  out.array() *= op_eigen_.array();
  return out;
}

VectorXcd FilterLab::momentum_state(const MatrixXd& op_eig, const ed::MomentumSector& sector) const {
  VectorXd col = op_eig.col(ground_);
  col(ground_) = 0.0;
  const VectorXd full = basis_->vectors * col;
  return std::sqrt(static_cast<double>(sector.table().sites())) * sector.project(full.cast<cplx>());
}

VectorXcd FilterLab::momentum_state(const ed::RegionOperator& local, const ed::MomentumSector& sector) const {
  return ed::momentum_state(local, sector, ground());
}

MatrixXd FilterLab::to_product_basis(const MatrixXd& op_eig) const {
  const MatrixXd& v = basis_->vectors;
  MatrixXd tmp;
  tmp.noalias() = v * op_eig;
  MatrixXd out;
  out.noalias() = tmp * v.transpose();
  return out;
}

double seminorm_prime(const VectorXcd& phi, int alpha, const ed::EigenSector& sector) {
  if (!sector.full) throw_invalid("seminorm_prime: needs the full sector basis");
  const VectorXcd amps = sector.vectors.adjoint() * phi;
  double acc = 0.0;
  for (Eigen::Index b = 0; b < amps.size(); ++b)
    if (b != alpha) acc += std::norm(amps(b));
  return std::sqrt(acc);
}

double spectral_weight(const VectorXcd& phi, int alpha, const ed::EigenSector& sector, double op_norm) {
  if (op_norm == 0.0) return 0.0;
  return std::abs(sector.vectors.col(alpha).dot(phi)) / op_norm;
}

double cluster_constant(const models::Region& y, double delta) {
  if (!(delta > 0.0)) throw_invalid("cluster_constant: delta must be positive");
  return std::sqrt(y.diameter() + y.size() / delta);
}

double localization_prefactor(const models::Region& x, int ell, double delta, const FilterSchedule& schedule) {
  return x.size() * cluster_constant(x.ball(ell + 1), delta) /
         (schedule.s * schedule.mu * std::sqrt(2.0 * kPi * schedule.q));
}

TheoremBound theorem_bound(int ell, double f, double delta_e, double v_lr, double d_x, double c) {
  TheoremBound out;
  if (!(f > 0.0)) return out;
  const double decay = std::exp(-delta_e * ell / (2.0 * v_lr));
  out.factor = (c + d_x / f) * decay;
  out.defined = out.factor < 1.0;
  out.beyond_ell0 = out.factor <= 0.5;
  if (out.defined) out.value = 1.0 - (1.0 + c + d_x) / (1.0 - out.factor) * decay / f;
  return out;
}

std::optional<int> ell_zero(const models::Region& x, double f, double delta_e, double gap, double mu, double s,
                            double c, int max_ell) {
  if (!(f > 0.0)) return std::nullopt;
  const int n = x.lattice_size();
  double saturated = -1.0;
  for (int ell = 1; ell <= max_ell; ++ell) {
    const auto sched = make_schedule(ell, delta_e, mu, s, c);
    // The ball stops growing once it covers the ring.
    double cluster;
    if (saturated >= 0.0) {
      cluster = saturated;
    } else {
      const auto ball = x.ball(ell + 1);
      cluster = cluster_constant(ball, gap);
      if (ball.size() == n) saturated = cluster;
    }
    const double d_x = x.size() * cluster / (s * mu * std::sqrt(2.0 * kPi * sched.q));
    if (theorem_bound(ell, f, delta_e, sched.v_lr, d_x, c).beyond_ell0) return ell;
  }
  return std::nullopt;
}

PipelineResult run_filter_pipeline(const models::LocalHamiltonian& h, const ed::ChainSpectrum& spectrum,
                                   const ed::RealEigenbasis& basis, const ed::RegionOperator& op,
                                   const PipelineOptions& options) {
  const int n = h.lattice_size();
  const int d = h.local_dim();
  if (options.momentum_index < 0 || options.momentum_index >= n) throw_invalid("filter: momentum index off the grid");
  if (options.ell_max < 1) throw_invalid("filter: lmax must be at least 1");
  const auto& sector = spectrum.sectors[options.momentum_index];
  const auto& eig = spectrum.eigen[options.momentum_index];
  if (!eig.full) throw_invalid("filter: needs full sector spectra");
  if (options.alpha < 0 || options.alpha >= eig.energies.size()) throw_invalid("filter: target level out of range");

  PipelineResult out;
  const double isolation = ed::isolation_gap(eig, options.alpha);
  if (isolation < 1e-9) throw_numerical("filter: target level is degenerate within its sector");
  out.delta_e = isolation * options.delta_e_scale;
  out.gap = spectrum.gap;
  out.s = models::lr_constant_s(h, options.mu);
  out.v_lr = models::lr_velocity(out.delta_e, out.s, options.mu);
  out.target_energy = eig.energies(options.alpha);

  const FilterLab lab(spectrum, basis, op);
  const VectorXcd phi_raw = lab.momentum_state(lab.op_eigen(), sector);
  out.weight = spectral_weight(phi_raw, options.alpha, eig, lab.op_norm());
  out.baseline_fidelity =
      phi_raw.norm() > 0.0 ? std::abs(eig.vectors.col(options.alpha).dot(phi_raw)) / phi_raw.norm() : 0.0;
  out.ell0 = ell_zero(op.region, out.weight, out.delta_e, out.gap, options.mu, out.s, options.c);

  for (int ell = 1; ell <= options.ell_max; ++ell) {
    const auto sched = make_schedule(ell, out.delta_e, options.mu, out.s, options.c);
    const auto kernel = lab.kernel_for(out.target_energy, sched.q, sched.time);
    const MatrixXd o2_eig = lab.truncated_filter(out.target_energy, kernel);

    FidelityReport row;
    row.ell = ell;
    row.time = sched.time;
    row.q = sched.q;
    row.weight = out.weight;
    row.quadrature_nodes = kernel.nodes();

    const VectorXcd phi_o2 = lab.momentum_state(o2_eig, sector);
    row.fidelity_o2 = std::abs(eig.vectors.col(options.alpha).dot(phi_o2)) / phi_o2.norm();

    const MatrixXd o2 = lab.to_product_basis(o2_eig);
    const ed::RegionOperator localized = ed::partial_trace_localize(o2, op.region.ball(ell), d);
    const ed::RegionOperator localized_adj{localized.region, localized.matrix.adjoint(), "adjoint"};
    auto real_times = [](const auto& m, const VectorXcd& x) -> VectorXcd {
      const VectorXd re = m * x.real();
      const VectorXd im = m * x.imag();
      VectorXcd out(re.size());
      out.real() = re;
      out.imag() = im;
      return out;
    };
    row.localization_error = linalg::operator_norm(
        [&](const VectorXcd& x) -> VectorXcd { return ed::apply_region_operator(localized, x, d) - real_times(o2, x); },
        [&](const VectorXcd& x) -> VectorXcd {
          return ed::apply_region_operator(localized_adj, x, d) - real_times(o2.transpose(), x);
        },
        o2.rows());
    row.localization_bound = 2.0 * op.region.size() / (out.s * std::sqrt(2.0 * kPi * sched.q)) * lab.op_norm() *
                             std::exp(2.0 * out.s * sched.time - options.mu * ell);

    const VectorXcd phi = lab.momentum_state(localized, sector);
    row.norm = phi.norm();
    row.overlap = std::abs(eig.vectors.col(options.alpha).dot(phi));
    row.seminorm = seminorm_prime(phi, options.alpha, eig);
    row.fidelity = row.norm > 0.0 ? row.overlap / row.norm : 0.0;

    row.d_x = localization_prefactor(op.region, ell, out.gap, sched);
    const auto bound = theorem_bound(ell, out.weight, out.delta_e, sched.v_lr, row.d_x, options.c);
    row.bound = bound.value;
    row.bound_defined = bound.defined;
    row.beyond_ell0 = bound.beyond_ell0;
    row.bound_violated = bound.beyond_ell0 && row.fidelity < bound.value;
    out.rows.push_back(row);
  }

  out.fidelity_nondecreasing = true;
  double previous = out.baseline_fidelity;
  for (const auto& r : out.rows) {
    if (r.fidelity < previous - 1e-9) out.fidelity_nondecreasing = false;
    previous = r.fidelity;
  }
  // Least-squares slope of log(1 - F) against ell.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : out.rows) {
    if (1.0 - r.fidelity <= 0.0) continue;
    const double y = std::log(1.0 - r.fidelity);
    sx += r.ell;
    sy += y;
    sxx += r.ell * r.ell;
    sxy += r.ell * y;
    ++m;
  }
  if (m >= 2) out.decay_rate = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

}  // namespace quasix::filter
