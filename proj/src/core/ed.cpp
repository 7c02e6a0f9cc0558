#include "core/ed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "core/linalg.hpp"
#include "core/parallel.hpp"

namespace quasix::ed {

OrbitTable::OrbitTable(int sites, int local_dim) : n_(sites), d_(local_dim) {
  if (sites < 1 || local_dim < 2) throw_invalid("OrbitTable: need sites >= 1 and d >= 2");
  const double bits = sites * std::log2(static_cast<double>(local_dim));
  if (bits > 31.0) throw_invalid("OrbitTable: Hilbert space too large for exact diagonalization");
  size_ = ipow(d_, n_);
  constexpr std::uint32_t unset = std::numeric_limits<std::uint32_t>::max();
  orbit_.assign(size_, unset);
  shift_.assign(size_, 0);
  std::vector<std::uint64_t> members;
  for (std::uint64_t code = 0; code < size_; ++code) {
    if (orbit_[code] != unset) continue;
    // Codes are visited in increasing order, so the first unvisited code is the orbit minimum.
    const auto id = static_cast<std::uint32_t>(reps_.size());
    members.clear();
    std::uint64_t c = code;
    do {
      members.push_back(c);
      c = translate(c);
    } while (c != code);
    for (std::size_t l = 0; l < members.size(); ++l) {
      orbit_[members[l]] = id;
      shift_[members[l]] = static_cast<std::uint8_t>(l);
    }
    reps_.push_back(code);
    periods_.push_back(static_cast<int>(members.size()));
  }
}

std::uint64_t OrbitTable::translate(std::uint64_t code) const {
  const std::uint64_t top = code / (size_ / d_);
  return (code * d_) % size_ + top;
}

int OrbitTable::digit(std::uint64_t code, int site) const {
  return static_cast<int>((code / ipow(d_, site)) % d_);
}

MomentumSector::MomentumSector(std::shared_ptr<const OrbitTable> table, int momentum_index)
    : table_(std::move(table)) {
  const int n = table_->sites();
  if (momentum_index < 0 || momentum_index >= n) throw_invalid("MomentumSector: momentum index off the grid");
  k_ = momentum_index;
  index_.assign(table_->orbit_count(), -1);
  for (std::size_t o = 0; o < table_->orbit_count(); ++o) {
    if ((static_cast<long>(k_) * table_->period(o)) % n == 0) {
      index_[o] = static_cast<Eigen::Index>(orbits_.size());
      orbits_.push_back(o);
    }
  }
}

double MomentumSector::momentum() const { return 2.0 * kPi * k_ / table_->sites(); }

VectorXcd MomentumSector::project(const VectorXcd& full) const {
  if (static_cast<std::uint64_t>(full.size()) != table_->size()) throw_invalid("project: vector size mismatch");
  const double p = momentum();
  VectorXcd out(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const int r = period(i);
    std::uint64_t c = representative(i);
    cplx acc = 0.0;
    for (int j = 0; j < r; ++j) {
      acc += std::polar(1.0, -p * j) * full(static_cast<Eigen::Index>(c));
      c = table_->translate(c);
    }
    out(i) = acc / std::sqrt(static_cast<double>(r));
  }
  return out;
}

VectorXcd MomentumSector::expand(const VectorXcd& coeffs) const {
  if (coeffs.size() != dim()) throw_invalid("expand: coefficient size mismatch");
  const double p = momentum();
  VectorXcd out = VectorXcd::Zero(static_cast<Eigen::Index>(table_->size()));
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const int r = period(i);
    std::uint64_t c = representative(i);
    const cplx a = coeffs(i) / std::sqrt(static_cast<double>(r));
    for (int j = 0; j < r; ++j) {
      out(static_cast<Eigen::Index>(c)) += std::polar(1.0, p * j) * a;
      c = table_->translate(c);
    }
  }
  return out;
}

std::vector<std::uint64_t> region_places(const models::Region& region, int local_dim) {
  const int m = region.size();
  const auto dim = ipow(local_dim, m);
  std::vector<std::uint64_t> places(dim, 0);
  for (std::uint64_t r = 0; r < dim; ++r) {
    std::uint64_t rest = r;
    for (int j = m - 1; j >= 0; --j) {
      places[r] += (rest % local_dim) * ipow(local_dim, region.sites()[j]);
      rest /= local_dim;
    }
  }
  return places;
}

namespace {

std::uint64_t local_index(std::uint64_t code, const std::vector<int>& sites, int d) {
  std::uint64_t r = 0;
  for (int s : sites) r = r * d + (code / ipow(d, s)) % d;
  return r;
}

struct PreparedTerm {
  std::vector<int> sites;
  std::vector<std::uint64_t> places;
  // Nonzeros of each column: (row, value).
  std::vector<std::vector<std::pair<std::uint64_t, cplx>>> columns;
};

std::vector<PreparedTerm> prepare_terms(const models::LocalHamiltonian& h) {
  std::vector<PreparedTerm> out;
  for (const auto& t : h.terms()) {
    PreparedTerm p;
    p.sites = t.region.sites();
    p.places = region_places(t.region, h.local_dim());
    const MatrixXcd& m = *t.matrix;
    p.columns.resize(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        if (m(r, c) != cplx(0.0)) p.columns[c].emplace_back(r, m(r, c));
    out.push_back(std::move(p));
  }
  return out;
}

bool is_real_matrix(const SparseMatrixXcd& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrixXcd::InnerIterator it(m, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

}  // namespace

SparseMatrixXcd sector_hamiltonian(const models::LocalHamiltonian& h, const MomentumSector& sector) {
  const OrbitTable& table = sector.table();
  if (table.sites() != h.lattice_size() || table.local_dim() != h.local_dim())
    throw_invalid("sector_hamiltonian: model and sector disagree on the lattice");
  const auto terms = prepare_terms(h);
  const double p = sector.momentum();
  const int n = table.sites();
  std::vector<cplx> phase(n);
  for (int l = 0; l < n; ++l) phase[l] = std::polar(1.0, -p * l);

  std::vector<Eigen::Triplet<cplx>> triplets;
  for (Eigen::Index a = 0; a < sector.dim(); ++a) {
    const std::uint64_t code = sector.representative(a);
    const double ra = sector.period(a);
    for (const auto& t : terms) {
      const std::uint64_t rin = local_index(code, t.sites, table.local_dim());
      const std::uint64_t base = code - t.places[rin];
      for (const auto& [rout, value] : t.columns[rin]) {
        const std::uint64_t c = base + t.places[rout];
        const auto orbit = table.orbit_of(c);
        const Eigen::Index b = sector.index_of_orbit(orbit);
        if (b < 0) continue;
        const double rb = table.period(orbit);
        triplets.emplace_back(b, a, value * phase[table.shift_of(c)] * std::sqrt(ra / rb));
      }
    }
  }
  SparseMatrixXcd m(sector.dim(), sector.dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

EigenSector eigensolve(const SparseMatrixXcd& m, SolveMode mode, int count, bool want_vectors) {
  EigenSector out;
  const Eigen::Index n = m.rows();
  if (n == 0) {
    out.full = mode == SolveMode::Full;
    return out;
  }
  if (mode == SolveMode::Full) {
    out.full = true;
    if (is_real_matrix(m)) {
      const MatrixXd dense = MatrixXd(m.real());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(dense, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw_numerical("eigensolve: dense solver failed");
      out.energies = es.eigenvalues();
      if (want_vectors) out.vectors = es.eigenvectors().cast<cplx>();
    } else {
      const MatrixXcd dense = MatrixXcd(m);
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(dense, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw_numerical("eigensolve: dense solver failed");
      out.energies = es.eigenvalues();
      if (want_vectors) out.vectors = es.eigenvectors();
    }
    out.residuals = VectorXd::Zero(out.energies.size());
    return out;
  }
  out.full = false;
  auto apply = [&m](const VectorXcd& v) -> VectorXcd { return m * v; };
  const auto res = linalg::lanczos_lowest(apply, n, count, 1e-10, 600, want_vectors);
  out.energies = res.values;
  out.vectors = res.vectors;
  out.residuals = res.residuals;
  return out;
}

ChainSpectrum solve_chain(const models::LocalHamiltonian& h, SolveMode mode, int count) {
  ChainSpectrum out;
  const int n = h.lattice_size();
  out.table = std::make_shared<const OrbitTable>(n, h.local_dim());
  out.real_hamiltonian = h.is_real();
  for (int k = 0; k < n; ++k) out.sectors.emplace_back(out.table, k);
  out.eigen.resize(n);
  const int per_sector = std::max(count, 2);
  parallel_for(n, [&](int k) {
    const auto m = sector_hamiltonian(h, out.sectors[k]);
    EigenSector es = eigensolve(m, mode, per_sector, mode == SolveMode::Full || k == 0);
    es.momentum_index = k;
    es.momentum = out.sectors[k].momentum();
    out.eigen[k] = std::move(es);
  });

  double e0 = std::numeric_limits<double>::infinity();
  for (const auto& es : out.eigen) {
    if (es.energies.size() > 0 && es.energies(0) < e0) {
      e0 = es.energies(0);
      out.ground_sector = es.momentum_index;
    }
  }
  if (out.ground_sector != 0) throw_numerical("solve_chain: ground state is not translation invariant");
  out.ground_energy = e0;
  for (auto& es : out.eigen) es.energies.array() -= e0;

  const auto& g = out.eigen[0];
  if (g.energies.size() > 1 && g.energies(1) < 1e-9)
    throw_numerical("solve_chain: degenerate ground state");
  out.ground_state = out.sectors[0].expand(g.vectors.col(0));
  out.ground_state.normalize();

  out.gap = std::numeric_limits<double>::infinity();
  for (const auto& es : out.eigen) {
    const Eigen::Index first = es.momentum_index == 0 ? 1 : 0;
    if (es.energies.size() > first) out.gap = std::min(out.gap, es.energies(first));
  }
  return out;
}

double isolation_gap(const EigenSector& sector, int alpha) {
  if (alpha < 0 || alpha >= sector.energies.size()) throw_invalid("isolation_gap: level index out of range");
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < sector.energies.size(); ++b)
    if (b != alpha) gap = std::min(gap, std::abs(sector.energies(b) - sector.energies(alpha)));
  return gap;
}

RealEigenbasis real_eigenbasis(const ChainSpectrum& spectrum) {
  if (!spectrum.real_hamiltonian) throw_invalid("real_eigenbasis: Hamiltonian is not real");
  const int n = static_cast<int>(spectrum.sectors.size());
  const auto dim = static_cast<Eigen::Index>(spectrum.table->size());
  RealEigenbasis out;
  out.energies.resize(dim);
  out.vectors.resize(dim, dim);
  Eigen::Index col = 0;
  for (int k = 0; k < n; ++k) {
    const int partner = (n - k) % n;
    if (partner < k) continue;
    const auto& es = spectrum.eigen[k];
    if (!es.full) throw_invalid("real_eigenbasis: needs full sector spectra");
    const Eigen::Index levels = es.energies.size();
    for (Eigen::Index a = 0; a < levels; ++a) {
      const VectorXcd psi = spectrum.sectors[k].expand(es.vectors.col(a));
      if (partner == k) {
        // The sector is closed under conjugation, so each degenerate cluster
        // has a real orthonormal basis spanning its real and imaginary parts.
        const double scale = std::max(1.0, std::abs(es.energies(a)));
        Eigen::Index end = a + 1;
        while (end < levels && es.energies(end) - es.energies(end - 1) < 1e-9 * scale) ++end;
        const Eigen::Index m = end - a;
        MatrixXd parts(dim, 2 * m);
        for (Eigen::Index j = 0; j < m; ++j) {
          const VectorXcd phi = j == 0 ? psi : spectrum.sectors[k].expand(es.vectors.col(a + j));
          parts.col(2 * j) = phi.real();
          parts.col(2 * j + 1) = phi.imag();
        }
        Eigen::JacobiSVD<MatrixXd> svd(parts, Eigen::ComputeThinU);
        for (Eigen::Index j = 0; j < m; ++j) {
          out.vectors.col(col) = svd.matrixU().col(j);
          out.energies(col++) = es.energies(a + j);
        }
        a = end - 1;
      } else {
        out.vectors.col(col) = std::sqrt(2.0) * psi.real();
        out.energies(col++) = es.energies(a);
        out.vectors.col(col) = std::sqrt(2.0) * psi.imag();
        out.energies(col++) = es.energies(a);
      }
    }
  }
  if (col != dim) throw_numerical("real_eigenbasis: sector dimensions do not add up");
  return out;
}

RegionOperator random_hermitian(const models::Region& region, int local_dim, std::uint64_t seed) {
  const auto dim = static_cast<Eigen::Index>(ipow(local_dim, region.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MatrixXcd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = cplx(gauss(rng), gauss(rng));
  MatrixXcd herm = 0.5 * (m + m.adjoint());
  herm /= linalg::operator_norm(herm);
  return {region, herm, "random" + std::to_string(region.size())};
}

RegionOperator named_operator(const std::string& spec, int local_dim, int lattice_size, int site,
                              std::uint64_t seed) {
  if (spec.rfind("random", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(spec.substr(6));
    } catch (const std::exception&) {
      throw_invalid("operator '" + spec + "': expected randomK");
    }
    if (k < 1 || k > lattice_size) throw_invalid("operator '" + spec + "': bad support size");
    auto op = random_hermitian(models::Region::arc(site, k, lattice_size), local_dim, seed);
    op.label = spec;
    return op;
  }
  MatrixXcd m = MatrixXcd::Identity(1, 1);
  int length = 0;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string name = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (name.empty()) throw_invalid("operator '" + spec + "': empty factor");
    m = models::kron(m, models::site_operator(name, local_dim));
    ++length;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (length > lattice_size) throw_invalid("operator '" + spec + "' is longer than the lattice");
  return {models::Region::arc(site, length, lattice_size), m, spec};
}

MatrixXcd embed_region_operator(const RegionOperator& op, int lattice_size, int local_dim) {
  const auto dim = static_cast<Eigen::Index>(ipow(local_dim, lattice_size));
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  const auto places = region_places(op.region, local_dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const auto rin = local_index(static_cast<std::uint64_t>(c), op.region.sites(), local_dim);
    const auto base = static_cast<std::uint64_t>(c) - places[rin];
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r)
      out(static_cast<Eigen::Index>(base + places[r]), c) += op.matrix(r, static_cast<Eigen::Index>(rin));
  }
  return out;
}

template <typename Vec>
Vec apply_region_operator(const RegionOperator& op, const Vec& v, int local_dim) {
  using Scalar = typename Vec::Scalar;
  const auto places = region_places(op.region, local_dim);
  const Eigen::Index local = op.matrix.rows();
  Vec out = Vec::Zero(v.size());
  // Loop over the complement configurations (codes with zero digits on the region).
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (local_index(static_cast<std::uint64_t>(i), op.region.sites(), local_dim) != 0) continue;
    const auto base = static_cast<std::uint64_t>(i);
    for (Eigen::Index c = 0; c < local; ++c) {
      const Scalar x = v(static_cast<Eigen::Index>(base + places[c]));
      if (x == Scalar(0)) continue;
      for (Eigen::Index r = 0; r < local; ++r) {
        if constexpr (std::is_same_v<Scalar, double>)
          out(static_cast<Eigen::Index>(base + places[r])) += op.matrix(r, c).real() * x;
        else
          out(static_cast<Eigen::Index>(base + places[r])) += op.matrix(r, c) * x;
      }
    }
  }
  return out;
}

template <typename Mat>
RegionOperator partial_trace_localize(const Mat& full, const models::Region& region, int local_dim) {
  if (!region.contiguous()) throw_invalid("partial_trace_localize: region is not contiguous");
  const int n = region.lattice_size();
  if (static_cast<std::uint64_t>(full.rows()) != ipow(local_dim, n) || full.rows() != full.cols())
    throw_invalid("partial_trace_localize: operator does not match the lattice");
  const auto places = region_places(region, local_dim);
  const auto local = static_cast<Eigen::Index>(places.size());
  const double norm = static_cast<double>(ipow(local_dim, n - region.size()));
  MatrixXcd out = MatrixXcd::Zero(local, local);
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    if (local_index(static_cast<std::uint64_t>(i), region.sites(), local_dim) != 0) continue;
    const auto base = static_cast<std::uint64_t>(i);
    for (Eigen::Index c = 0; c < local; ++c) {
      const auto col = static_cast<Eigen::Index>(base + places[c]);
      for (Eigen::Index r = 0; r < local; ++r) out(r, c) += full(static_cast<Eigen::Index>(base + places[r]), col);
    }
  }
  out /= norm;
  return {region, out, "localized"};
}

template VectorXcd apply_region_operator<VectorXcd>(const RegionOperator&, const VectorXcd&, int);
template VectorXd apply_region_operator<VectorXd>(const RegionOperator&, const VectorXd&, int);
template RegionOperator partial_trace_localize<MatrixXd>(const MatrixXd&, const models::Region&, int);
template RegionOperator partial_trace_localize<MatrixXcd>(const MatrixXcd&, const models::Region&, int);

namespace {

bool translation_invariant(const VectorXcd& v, const OrbitTable& table) {
  double err = 0.0;
  for (std::uint64_t c = 0; c < table.size(); ++c)
    err = std::max(err, std::abs(v(static_cast<Eigen::Index>(table.translate(c))) - v(static_cast<Eigen::Index>(c))));
  return err <= 1e-8 * std::max(1.0, v.cwiseAbs().maxCoeff());
}

}  // namespace

VectorXcd momentum_state(const RegionOperator& op, const MomentumSector& sector, const VectorXcd& ground) {
  const OrbitTable& table = sector.table();
  if (static_cast<std::uint64_t>(ground.size()) != table.size()) throw_invalid("momentum_state: ground size mismatch");
  if (!translation_invariant(ground, table)) throw_invalid("momentum_state: ground state is not translation invariant");
  VectorXcd w = apply_region_operator(op, ground, table.local_dim());
  w -= ground * ground.dot(w);
  return std::sqrt(static_cast<double>(table.sites())) * sector.project(w);
}

BoundCheck norm_bound_check(const RegionOperator& op, const MomentumSector& sector, const VectorXcd& ground,
                            double delta) {
  if (!(delta > 0.0)) throw_invalid("norm_bound_check: delta must be positive");
  const VectorXcd phi = momentum_state(op, sector, ground);
  const VectorXcd og = apply_region_operator(op, ground, sector.table().local_dim());
  const cplx expectation = ground.dot(og);
  const MatrixXcd centered = op.matrix - expectation * MatrixXcd::Identity(op.matrix.rows(), op.matrix.cols());
  BoundCheck out;
  out.lhs = phi.norm();
  out.rhs = std::sqrt(op.region.diameter() + op.region.size() / delta) * linalg::operator_norm(centered);
  return out;
}

BoundCheck lr_commutator_check(const RegionOperator& a, const RegionOperator& b, double t,
                               const RealEigenbasis& basis, const models::LRConstants& lr, int local_dim) {
  const int n = a.region.lattice_size();
  const int dist = models::distance(a.region, b.region);
  if (dist == 0) throw_invalid("lr_commutator_check: supports overlap");
  const MatrixXd& v = basis.vectors;
  if (static_cast<std::uint64_t>(v.rows()) != ipow(local_dim, n)) throw_invalid("lr_commutator_check: basis size mismatch");

  // Everything in the energy eigenbasis: A(t) = D A D^dagger with D = diag(e^{iEt}).
  const MatrixXcd at = v.transpose().cast<cplx>() * embed_region_operator(a, n, local_dim) * v.cast<cplx>();
  const MatrixXcd bt = v.transpose().cast<cplx>() * embed_region_operator(b, n, local_dim) * v.cast<cplx>();
  VectorXcd d(v.rows());
  for (Eigen::Index i = 0; i < v.rows(); ++i) d(i) = std::polar(1.0, basis.energies(i) * t);
  const MatrixXcd a_t = d.asDiagonal() * at * d.conjugate().asDiagonal();
  const MatrixXcd comm = a_t * bt - bt * a_t;

  BoundCheck out;
  out.lhs = linalg::operator_norm(
      [&](const VectorXcd& x) -> VectorXcd { return comm * x; },
      [&](const VectorXcd& x) -> VectorXcd { return comm.adjoint() * x; }, comm.rows());
  out.rhs = 2.0 * linalg::operator_norm(a.matrix) * linalg::operator_norm(b.matrix) * a.region.size() *
            std::exp(-lr.mu * dist) * (std::exp(2.0 * lr.s * std::abs(t)) - 1.0);
  return out;
}

}  // namespace quasix::ed
