#include "core/mps.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "core/models.hpp"

namespace quasix::mps {

namespace {

using Index = Eigen::Index;

VectorXcd vec(const MatrixXcd& m) { return Eigen::Map<const VectorXcd>(m.data(), m.size()); }

MatrixXcd unvec(const VectorXcd& v, int d) { return Eigen::Map<const MatrixXcd>(v.data(), d, d); }

cplx entry(const MatrixXcd& op, int row, int col) {
  if (op.size() == 0) return row == col ? cplx(1.0) : cplx(0.0);
  return op(row, col);
}

bool is_identity(const MatrixXcd& m) {
  return m.rows() == m.cols() && (m - MatrixXcd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() < 1e-14;
}

// (I - e^{ip} E~)^{-1} P as a dense superoperator on vec space.
MatrixXcd projected_resolvent(const MatrixXcd& transfer, const MatrixXcd& fixed, const MatrixXcd& dual, double p) {
  const Index n = transfer.rows();
  const MatrixXcd rank_one = vec(fixed) * vec(dual.transpose()).transpose();
  const MatrixXcd proj = MatrixXcd::Identity(n, n) - rank_one;
  const MatrixXcd reduced = transfer - rank_one;
  const MatrixXcd lhs = MatrixXcd::Identity(n, n) - std::polar(1.0, p) * reduced;
  return lhs.partialPivLu().solve(proj);
}

MatrixXcd two_site_left(const MpsTensor& t, const MatrixXcd& l, const MatrixXcd& h) {
  const int d = t.phys_dim;
  MatrixXcd out = MatrixXcd::Zero(t.bond_dim, t.bond_dim);
  for (int s1 = 0; s1 < d; ++s1)
    for (int s2 = 0; s2 < d; ++s2) {
      const MatrixXcd ket = l * t.a[s1] * t.a[s2];
      for (int b1 = 0; b1 < d; ++b1)
        for (int b2 = 0; b2 < d; ++b2) {
          const cplx c = h(b1 * d + b2, s1 * d + s2);
          if (c == 0.0) continue;
          out += c * (t.a[b1] * t.a[b2]).adjoint() * ket;
        }
    }
  return out;
}

}  // namespace

MpsTensor aklt_tensor() {
  MpsTensor t;
  t.bond_dim = 2;
  t.phys_dim = 3;
  MatrixXcd plus = MatrixXcd::Zero(2, 2), zero = MatrixXcd::Zero(2, 2), minus = MatrixXcd::Zero(2, 2);
  plus(0, 1) = std::sqrt(2.0 / 3.0);
  zero(0, 0) = -1.0 / std::sqrt(3.0);
  zero(1, 1) = 1.0 / std::sqrt(3.0);
  minus(1, 0) = -std::sqrt(2.0 / 3.0);
  t.a = {plus, zero, minus};
  t.bond_charge = {1, -1};
  t.phys_charge = {2, 0, -2};
  return t;
}

MatrixXcd transfer_right(const MpsTensor& t, const MatrixXcd& op) {
  const int n = t.bond_dim * t.bond_dim;
  MatrixXcd out = MatrixXcd::Zero(n, n);
  for (int sp = 0; sp < t.phys_dim; ++sp)
    for (int s = 0; s < t.phys_dim; ++s) {
      const cplx c = entry(op, sp, s);
      if (c != 0.0) out += c * models::kron(t.a[sp].conjugate(), t.a[s]);
    }
  return out;
}

MatrixXcd transfer_left(const MpsTensor& t, const MatrixXcd& op) {
  const int n = t.bond_dim * t.bond_dim;
  MatrixXcd out = MatrixXcd::Zero(n, n);
  for (int sp = 0; sp < t.phys_dim; ++sp)
    for (int s = 0; s < t.phys_dim; ++s) {
      const cplx c = entry(op, sp, s);
      if (c != 0.0) out += c * models::kron(t.a[s].transpose(), t.a[sp].adjoint());
    }
  return out;
}

MatrixXcd apply_right(const MpsTensor& t, const MatrixXcd& r, const MatrixXcd& op) {
  MatrixXcd out = MatrixXcd::Zero(t.bond_dim, t.bond_dim);
  for (int sp = 0; sp < t.phys_dim; ++sp)
    for (int s = 0; s < t.phys_dim; ++s) {
      const cplx c = entry(op, sp, s);
      if (c != 0.0) out += c * t.a[s] * r * t.a[sp].adjoint();
    }
  return out;
}

MatrixXcd apply_left(const MpsTensor& t, const MatrixXcd& l, const MatrixXcd& op) {
  MatrixXcd out = MatrixXcd::Zero(t.bond_dim, t.bond_dim);
  for (int sp = 0; sp < t.phys_dim; ++sp)
    for (int s = 0; s < t.phys_dim; ++s) {
      const cplx c = entry(op, sp, s);
      if (c != 0.0) out += c * t.a[sp].adjoint() * l * t.a[s];
    }
  return out;
}

VectorXcd transfer_spectrum(const MpsTensor& t) {
  Eigen::ComplexEigenSolver<MatrixXcd> es(transfer_right(t), false);
  VectorXcd vals = es.eigenvalues();
  std::sort(vals.data(), vals.data() + vals.size(), [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  return vals;
}

FixedPoints transfer_fixed_points(const MpsTensor& t) {
  if (t.bond_dim < 1 || t.phys_dim < 1 || static_cast<int>(t.a.size()) != t.phys_dim)
    throw_invalid("transfer_fixed_points: malformed tensor");
  for (const auto& m : t.a)
    if (m.rows() != t.bond_dim || m.cols() != t.bond_dim) throw_invalid("transfer_fixed_points: malformed tensor");

  auto dominant = [](const MatrixXcd& m, cplx& value, double& second) {
    Eigen::ComplexEigenSolver<MatrixXcd> es(m);
    const VectorXcd& ev = es.eigenvalues();
    Index best = 0;
    for (Index i = 1; i < ev.size(); ++i)
      if (std::abs(ev(i)) > std::abs(ev(best))) best = i;
    second = 0.0;
    for (Index i = 0; i < ev.size(); ++i)
      if (i != best) second = std::max(second, std::abs(ev(i)));
    value = ev(best);
    return VectorXcd(es.eigenvectors().col(best));
  };

  FixedPoints fp;
  const int d = t.bond_dim;
  double second_left = 0.0;
  cplx left_value;
  fp.r = unvec(dominant(transfer_right(t), fp.leading, fp.second), d);
  fp.l = unvec(dominant(transfer_left(t), left_value, second_left), d);
  if (std::abs(fp.leading) == 0.0 || fp.second > std::abs(fp.leading) * (1.0 - 1e-10))
    throw_invalid("transfer_fixed_points: transfer matrix has no unique dominant eigenvalue");

  auto hermitian_phase = [](MatrixXcd& m) {
    const cplx tr = m.trace();
    if (std::abs(tr) < 1e-14) throw_numerical("transfer_fixed_points: fixed point with vanishing trace");
    m *= std::conj(tr) / std::abs(tr);
    m = (0.5 * (m + m.adjoint())).eval();
  };
  hermitian_phase(fp.r);
  hermitian_phase(fp.l);
  const double overlap = (fp.l * fp.r).trace().real();
  if (!(overlap > 0.0)) throw_numerical("transfer_fixed_points: fixed points are not positive");
  fp.l /= std::sqrt(overlap);
  fp.r /= std::sqrt(overlap);
  return fp;
}

MatrixXcd regularized_resolvent_apply(const MpsTensor& t, const FixedPoints& fp, double p, const MatrixXcd& b,
                                      bool projected) {
  const int d = t.bond_dim;
  if (b.rows() != d || b.cols() != d) throw_invalid("regularized_resolvent_apply: wrong shape");
  const MatrixXcd transfer = transfer_right(t);
  if (projected) return unvec(projected_resolvent(transfer, fp.r, fp.l, p) * vec(b), d);
  if (std::abs(1.0 - std::polar(1.0, p)) < 1e-12)
    throw_invalid("regularized_resolvent_apply: unprojected inverse is singular at p = 0");
  const MatrixXcd lhs = MatrixXcd::Identity(d * d, d * d) - std::polar(1.0, p) * transfer;
  return unvec(lhs.partialPivLu().solve(vec(b)), d);
}

double bond_energy(const MpsTensor& t, const FixedPoints& fp, const MatrixXcd& h) {
  const int d2 = t.phys_dim * t.phys_dim;
  if (h.rows() != d2 || h.cols() != d2) throw_invalid("bond_energy: term must act on two sites");
  return (two_site_left(t, fp.l, h) * fp.r).trace().real();
}

BondMpo bond_mpo(const MpsTensor& t, const FixedPoints& fp, const MatrixXcd& h) {
  const int d = t.phys_dim;
  BondMpo out;
  out.energy_density = bond_energy(t, fp, h);
  const MatrixXcd shifted = h - out.energy_density * MatrixXcd::Identity(d * d, d * d);
  MatrixXcd reshuffled(d * d, d * d);
  for (int s1 = 0; s1 < d; ++s1)
    for (int s2 = 0; s2 < d; ++s2)
      for (int t1 = 0; t1 < d; ++t1)
        for (int t2 = 0; t2 < d; ++t2) reshuffled(s1 * d + t1, s2 * d + t2) = shifted(s1 * d + s2, t1 * d + t2);
  Eigen::JacobiSVD<MatrixXcd> svd(reshuffled, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double cut = 1e-13 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  for (Index k = 0; k < sv.size(); ++k) {
    if (sv(k) <= cut) break;
    MatrixXcd left(d, d), right(d, d);
    const double w = std::sqrt(sv(k));
    for (int s = 0; s < d; ++s)
      for (int u = 0; u < d; ++u) {
        left(s, u) = w * svd.matrixU()(s * d + u, k);
        right(s, u) = w * std::conj(svd.matrixV()(s * d + u, k));
      }
    out.left.push_back(left);
    out.right.push_back(right);
  }
  return out;
}

namespace {

struct Solved {
  std::vector<double> energies;
  MatrixXcd vectors;
};

// Eigen-decomposition of N restricted to eigenvalues above cutoff, then H on that range.
Solved solve_on_range(const Eigen::SelfAdjointEigenSolver<MatrixXcd>& norm, const MatrixXcd& h, double cutoff,
                      bool want_vectors) {
  const VectorXd& lam = norm.eigenvalues();
  std::vector<Index> keep;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam(i) > cutoff) keep.push_back(i);
  Solved out;
  if (keep.empty()) return out;
  MatrixXcd basis(h.rows(), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    basis.col(static_cast<Index>(j)) = norm.eigenvectors().col(keep[j]) / std::sqrt(lam(keep[j]));
  MatrixXcd reduced = basis.adjoint() * h * basis;
  reduced = (0.5 * (reduced + reduced.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(reduced, want_vectors ? Eigen::ComputeEigenvectors
                                                                    : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw_numerical("excitation solve: eigensolver failed");
  out.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  if (want_vectors) out.vectors = basis * es.eigenvectors();
  return out;
}

double hermiticity(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / std::max(1.0, m.cwiseAbs().maxCoeff());
}

int count_lowest(const VectorXd& e) {
  int n = 0;
  for (Index i = 0; i < e.size(); ++i)
    if (e(i) - e(0) < 1e-8) ++n;
  return n;
}

}  // namespace

ExcitationLevels excitation_energies(const MatrixXcd& n, const MatrixXcd& h, double rank_tol, bool want_vectors) {
  if (n.rows() != n.cols() || h.rows() != h.cols() || n.rows() != h.rows())
    throw_invalid("excitation_energies: shape mismatch");
  ExcitationLevels out;
  out.hermiticity_residual = std::max(hermiticity(n), hermiticity(h));
  if (out.hermiticity_residual > 1e-9) throw_numerical("excitation_energies: matrices are not Hermitian");
  const MatrixXcd nh = 0.5 * (n + n.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> ns(nh);
  if (ns.info() != Eigen::Success) throw_numerical("excitation_energies: norm eigensolver failed");
  const double top = ns.eigenvalues().size() ? ns.eigenvalues().maxCoeff() : 0.0;
  if (!(top > 0.0)) throw_numerical("excitation_energies: norm matrix vanishes");
  const Solved s = solve_on_range(ns, 0.5 * (h + h.adjoint()), rank_tol * top, want_vectors);
  out.energies = Eigen::Map<const VectorXd>(s.energies.data(), static_cast<Index>(s.energies.size()));
  out.rank = static_cast<int>(s.energies.size());
  out.lowest_degeneracy = out.rank ? count_lowest(out.energies) : 0;
  if (want_vectors) out.vectors = s.vectors;
  return out;
}

ExcitationProblem::ExcitationProblem(MpsTensor tensor, const MatrixXcd& bond_term, int ell)
    : t_(std::move(tensor)), ell_(ell) {
  if (ell_ < 1) throw_invalid("ExcitationProblem: block length must be positive");
  fp_ = transfer_fixed_points(t_);
  if (std::abs(fp_.leading - 1.0) > 1e-12) {
    if (std::abs(fp_.leading.imag()) > 1e-12 || fp_.leading.real() <= 0.0)
      throw_invalid("ExcitationProblem: dominant transfer eigenvalue is not positive");
    for (auto& m : t_.a) m /= std::sqrt(fp_.leading.real());
    fp_ = transfer_fixed_points(t_);
  }
  d_ = t_.phys_dim;
  bond_ = t_.bond_dim;
  if (bond_term.rows() != d_ * d_ || bond_term.cols() != d_ * d_)
    throw_invalid("ExcitationProblem: bond term must act on two sites");
  if (hermiticity(bond_term) > 1e-12) throw_invalid("ExcitationProblem: bond term is not Hermitian");
  phys_block_ = static_cast<int>(ipow(static_cast<std::uint64_t>(d_), ell_));
  dim_ = static_cast<Index>(bond_) * bond_ * phys_block_;
  if (dim_ > 20000) throw_invalid("ExcitationProblem: block space too large");

  if (t_.has_charges()) {
    if (static_cast<int>(t_.bond_charge.size()) != bond_ || static_cast<int>(t_.phys_charge.size()) != d_)
      throw_invalid("ExcitationProblem: charge labels do not match the tensor");
    for (int s = 0; s < d_; ++s)
      for (int a = 0; a < bond_; ++a)
        for (int b = 0; b < bond_; ++b)
          if (std::abs(t_.a[s](a, b)) > 1e-14 && t_.bond_charge[a] != t_.phys_charge[s] + t_.bond_charge[b])
            throw_invalid("ExcitationProblem: tensor violates its charge labels");
  }

  mpo_ = bond_mpo(t_, fp_, bond_term);

  strings_.resize(ell_ + 1);
  strings_[0] = {MatrixXcd::Identity(bond_, bond_)};
  for (int k = 1; k <= ell_; ++k) {
    strings_[k].reserve(strings_[k - 1].size() * d_);
    for (const auto& prev : strings_[k - 1])
      for (int s = 0; s < d_; ++s) strings_[k].push_back(prev * t_.a[s]);
  }

  std::map<int, std::size_t> by_charge;
  where_.resize(dim_);
  for (Index i = 0; i < dim_; ++i) {
    const int q = t_.has_charges() ? index_charge(i) : 0;
    auto it = by_charge.find(q);
    if (it == by_charge.end()) it = by_charge.emplace(q, by_charge.size()).first;
    (void)it;
  }
  blocks_.resize(by_charge.size());
  block_charges_.resize(by_charge.size());
  {
    std::size_t pos = 0;
    for (auto& [q, slot] : by_charge) {
      slot = pos;
      block_charges_[pos] = q;
      ++pos;
    }
  }
  for (Index i = 0; i < dim_; ++i) {
    const std::size_t b = by_charge.at(t_.has_charges() ? index_charge(i) : 0);
    where_[i] = {b, static_cast<Index>(blocks_[b].size())};
    blocks_[b].push_back(i);
  }

  norm_mpo_ = make_identity_mpo();
  ham_mpo_ = make_hamiltonian_mpo();
  norm_forms_ = build_forms(norm_mpo_);
  ham_forms_ = build_forms(ham_mpo_);
}

int ExcitationProblem::index_charge(Index i) const {
  if (!t_.has_charges()) return 0;
  const Index beta = i % bond_;
  Index sigma = (i / bond_) % phys_block_;
  const Index alpha = i / (static_cast<Index>(bond_) * phys_block_);
  int q = t_.bond_charge[alpha] - t_.bond_charge[beta];
  for (int k = 0; k < ell_; ++k) {
    q -= t_.phys_charge[sigma % d_];
    sigma /= d_;
  }
  return q;
}

VectorXcd ExcitationProblem::ground_block() const {
  VectorXcd out(dim_);
  for (int a = 0; a < bond_; ++a)
    for (int s = 0; s < phys_block_; ++s)
      for (int b = 0; b < bond_; ++b) out((static_cast<Index>(a) * phys_block_ + s) * bond_ + b) = strings_[ell_][s](a, b);
  return out;
}

VectorXcd ExcitationProblem::constraint() const {
  VectorXcd out(dim_);
  for (int s = 0; s < phys_block_; ++s) {
    const MatrixXcd m = fp_.r * strings_[ell_][s].adjoint() * fp_.l;
    for (int a = 0; a < bond_; ++a)
      for (int b = 0; b < bond_; ++b) out((static_cast<Index>(a) * phys_block_ + s) * bond_ + b) = m(b, a);
  }
  return out;
}

MatrixXcd ExcitationProblem::projector() const {
  return MatrixXcd::Identity(dim_, dim_) - ground_block() * constraint().transpose();
}

ExcitationProblem::Mpo ExcitationProblem::make_identity_mpo() const {
  Mpo m;
  m.channels = 1;
  m.w = {{MatrixXcd::Identity(d_, d_)}};
  m.lenv = {fp_.l};
  m.renv = {fp_.r};
  return m;
}

ExcitationProblem::Mpo ExcitationProblem::make_hamiltonian_mpo() const {
  const int k = static_cast<int>(mpo_.left.size());
  const int c = k + 2, done = k + 1;
  Mpo m;
  m.channels = c;
  m.w.assign(c, std::vector<MatrixXcd>(c));
  m.w[0][0] = MatrixXcd::Identity(d_, d_);
  m.w[done][done] = MatrixXcd::Identity(d_, d_);
  for (int j = 0; j < k; ++j) {
    m.w[0][1 + j] = mpo_.left[j];
    m.w[1 + j][done] = mpo_.right[j];
  }

  MatrixXcd left_sum = MatrixXcd::Zero(bond_, bond_), right_sum = MatrixXcd::Zero(bond_, bond_);
  m.lenv.resize(c);
  m.renv.resize(c);
  m.lenv[0] = fp_.l;
  m.renv[done] = fp_.r;
  for (int j = 0; j < k; ++j) {
    m.lenv[1 + j] = apply_left(t_, fp_.l, mpo_.left[j]);
    m.renv[1 + j] = apply_right(t_, fp_.r, mpo_.right[j]);
    left_sum += apply_left(t_, m.lenv[1 + j], mpo_.right[j]);
    right_sum += apply_right(t_, m.renv[1 + j], mpo_.left[j]);
  }
  // Terms entirely to the left (right) of the window, summed with the
  // regularized inverse; the subtracted energy density makes this finite.
  m.lenv[done] = unvec(projected_resolvent(transfer_left(t_), fp_.l, fp_.r, 0.0) * vec(left_sum), bond_);
  m.renv[0] = unvec(projected_resolvent(transfer_right(t_), fp_.r, fp_.l, 0.0) * vec(right_sum), bond_);
  return m;
}

std::vector<std::vector<std::vector<MatrixXcd>>> ExcitationProblem::operator_strings(const Mpo& mpo) const {
  const int c = mpo.channels;
  std::vector<std::vector<std::vector<MatrixXcd>>> ops(ell_ + 1,
                                                      std::vector<std::vector<MatrixXcd>>(c, std::vector<MatrixXcd>(c)));
  for (int a = 0; a < c; ++a) ops[0][a][a] = MatrixXcd::Identity(1, 1);
  for (int len = 1; len <= ell_; ++len)
    for (int a = 0; a < c; ++a)
      for (int b = 0; b < c; ++b) {
        if (ops[len - 1][a][b].size() == 0) continue;
        for (int e = 0; e < c; ++e) {
          if (mpo.w[b][e].size() == 0) continue;
          MatrixXcd term = models::kron(ops[len - 1][a][b], mpo.w[b][e]);
          if (ops[len][a][e].size() == 0)
            ops[len][a][e] = std::move(term);
          else
            ops[len][a][e] += term;
        }
      }
  return ops;
}

ExcitationProblem::Forms ExcitationProblem::build_forms(const Mpo& mpo) const {
  const int c = mpo.channels;
  const int dd = bond_ * bond_;
  const auto ops = operator_strings(mpo);

  // sum_sigma O(x, sigma) A_sigma over k sites (ket side carries A).
  auto ket_dressed = [&](const MatrixXcd& op, int k, int x) {
    MatrixXcd out = MatrixXcd::Zero(bond_, bond_);
    for (Index s = 0; s < op.cols(); ++s)
      if (op(x, s) != 0.0) out += op(x, s) * strings_[k][s];
    return out;
  };
  // (sum_sigma' conj O(sigma', y) A_sigma')^dagger (bra side carries A).
  auto bra_dressed = [&](const MatrixXcd& op, int k, int y) {
    MatrixXcd out = MatrixXcd::Zero(bond_, bond_);
    for (Index s = 0; s < op.rows(); ++s)
      if (op(s, y) != 0.0) out += std::conj(op(s, y)) * strings_[k][s];
    return MatrixXcd(out.adjoint());
  };

  using Factors = std::vector<std::vector<MatrixXcd>>;  // [channel][physical index], empty when absent
  // Left factor [bra bond, ket bond] and right factor [ket bond, bra bond] over k sites.
  auto left_factors = [&](int k, bool bra_open) {
    const int n = static_cast<int>(ipow(d_, k));
    Factors f(c);
    for (int a1 = 0; a1 < c; ++a1)
      for (int a = 0; a < c; ++a) {
        const MatrixXcd& op = ops[k][a][a1];
        if (op.size() == 0) continue;
        if (f[a1].empty()) f[a1].assign(n, MatrixXcd::Zero(bond_, bond_));
        for (int x = 0; x < n; ++x)
          f[a1][x] += bra_open ? MatrixXcd(mpo.lenv[a] * ket_dressed(op, k, x))
                               : MatrixXcd(bra_dressed(op, k, x) * mpo.lenv[a]);
      }
    return f;
  };
  auto right_factors = [&](int k, bool ket_open) {
    const int n = static_cast<int>(ipow(d_, k));
    Factors f(c);
    for (int b1 = 0; b1 < c; ++b1)
      for (int b = 0; b < c; ++b) {
        const MatrixXcd& op = ops[k][b1][b];
        if (op.size() == 0) continue;
        if (f[b1].empty()) f[b1].assign(n, MatrixXcd::Zero(bond_, bond_));
        for (int y = 0; y < n; ++y)
          f[b1][y] += ket_open ? MatrixXcd(mpo.renv[b] * bra_dressed(op, k, y))
                               : MatrixXcd(ket_dressed(op, k, y) * mpo.renv[b]);
      }
    return f;
  };

  Forms forms;
  forms.windows.resize(2 * ell_ - 1);
  for (auto& w : forms.windows) {
    w.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto n = static_cast<Index>(blocks_[b].size());
      w[b] = MatrixXcd::Zero(n, n);
    }
  }

  auto index = [&](int alpha, int sigma, int beta) {
    return (static_cast<Index>(alpha) * phys_block_ + sigma) * bond_ + beta;
  };

  for (int shift = -(ell_ - 1); shift <= ell_ - 1; ++shift) {
    const int k = std::abs(shift), ov = ell_ - k;
    const int nk = static_cast<int>(ipow(d_, k)), nov = static_cast<int>(ipow(d_, ov));
    const bool forward = shift >= 0;  // ket block to the right of the bra block
    const Factors fl = left_factors(k, forward);
    const Factors fr = right_factors(k, forward);
    auto& target = forms.windows[shift + ell_ - 1];
    for (int a1 = 0; a1 < c; ++a1) {
      if (fl[a1].empty()) continue;
      for (int b1 = 0; b1 < c; ++b1) {
        if (fr[b1].empty()) continue;
        const MatrixXcd& omega = ops[ov][a1][b1];
        if (omega.size() == 0) continue;
        for (int x = 0; x < nk; ++x)
          for (int y = 0; y < nk; ++y) {
            const MatrixXcd& lf = fl[a1][x];
            const MatrixXcd& rf = fr[b1][y];
            for (int up = 0; up < nov; ++up)
              for (int u = 0; u < nov; ++u) {
                const cplx om = omega(up, u);
                if (om == 0.0) continue;
                const int bra_sigma = forward ? x * nov + up : up * nk + y;
                const int ket_sigma = forward ? u * nk + y : x * nov + u;
                for (int ap = 0; ap < bond_; ++ap)
                  for (int a = 0; a < bond_; ++a) {
                    const cplx lv = lf(ap, a) * om;
                    if (lv == 0.0) continue;
                    for (int bp = 0; bp < bond_; ++bp) {
                      const auto& [rb, rpos] = where_[index(ap, bra_sigma, bp)];
                      for (int b = 0; b < bond_; ++b) {
                        const auto& [cb, cpos] = where_[index(a, ket_sigma, b)];
                        if (cb != rb) continue;
                        target[rb](rpos, cpos) += lv * rf(b, bp);
                      }
                    }
                  }
              }
          }
      }
    }
  }

  // Disjoint blocks: vectors entering the channel resolvent.
  forms.tail_left = MatrixXcd::Zero(dim_, c * dd);
  forms.tail_right = MatrixXcd::Zero(c * dd, dim_);
  forms.tail_left_neg = MatrixXcd::Zero(dim_, c * dd);
  forms.tail_right_neg = MatrixXcd::Zero(c * dd, dim_);
  const Factors fl_pos = left_factors(ell_, true);
  const Factors fr_pos = right_factors(ell_, true);
  const Factors fl_neg = left_factors(ell_, false);
  const Factors fr_neg = right_factors(ell_, false);
  for (int ch = 0; ch < c; ++ch)
    for (int s = 0; s < phys_block_; ++s)
      for (int a = 0; a < bond_; ++a)
        for (int b = 0; b < bond_; ++b) {
          const Index i = index(a, s, b);
          for (int kk = 0; kk < bond_; ++kk) {
            if (!fl_pos[ch].empty()) forms.tail_left(i, ch * dd + b * bond_ + kk) = fl_pos[ch][s](a, kk);
            if (!fr_pos[ch].empty()) forms.tail_right(ch * dd + kk * bond_ + a, i) = fr_pos[ch][s](b, kk);
            if (!fl_neg[ch].empty()) forms.tail_left_neg(i, ch * dd + kk * bond_ + b) = fl_neg[ch][s](kk, a);
            if (!fr_neg[ch].empty()) forms.tail_right_neg(ch * dd + a * bond_ + kk, i) = fr_neg[ch][s](kk, b);
          }
        }
  return forms;
}

MatrixXcd ExcitationProblem::channel_resolvent(const Mpo& mpo, double p) const {
  const int c = mpo.channels, dd = bond_ * bond_;
  const cplx phase = std::polar(1.0, p);
  const MatrixXcd diag = projected_resolvent(transfer_right(t_), fp_.r, fp_.l, p);
  MatrixXcd z = MatrixXcd::Zero(c * dd, c * dd);
  for (int a = c - 1; a >= 0; --a) {
    MatrixXcd acc = MatrixXcd::Zero(dd, c * dd);
    acc.middleCols(a * dd, dd) = MatrixXcd::Identity(dd, dd);
    for (int b = a + 1; b < c; ++b)
      if (mpo.w[a][b].size() != 0) acc += phase * transfer_right(t_, mpo.w[a][b]) * z.middleRows(b * dd, dd);
    if (mpo.w[a][a].size() != 0) {
      if (!is_identity(mpo.w[a][a])) throw_invalid("channel_resolvent: diagonal MPO entries must be identities");
      z.middleRows(a * dd, dd) = diag * acc;
    } else {
      z.middleRows(a * dd, dd) = acc;
    }
  }
  return z;
}

MatrixXcd ExcitationProblem::assemble_block(const Mpo& mpo, const Forms& forms, double p, std::size_t block) const {
  const auto& rows = blocks_[block];
  const auto n = static_cast<Index>(rows.size());
  MatrixXcd g = MatrixXcd::Zero(n, n);
  for (int shift = -(ell_ - 1); shift <= ell_ - 1; ++shift)
    g += std::polar(1.0, p * shift) * forms.windows[shift + ell_ - 1][block];
  const MatrixXcd pos = channel_resolvent(mpo, p);
  const MatrixXcd neg = channel_resolvent(mpo, -p);
  g += std::polar(1.0, p * ell_) * (forms.tail_left(rows, Eigen::all) * pos * forms.tail_right(Eigen::all, rows));
  g += std::polar(1.0, -p * ell_) *
       (forms.tail_left_neg(rows, Eigen::all) * neg * forms.tail_right_neg(Eigen::all, rows)).transpose();
  return g;
}

MatrixXcd ExcitationProblem::assemble_full(const Mpo& mpo, const Forms& forms, double p) const {
  MatrixXcd out = MatrixXcd::Zero(dim_, dim_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) out(blocks_[b], blocks_[b]) = assemble_block(mpo, forms, p, b);
  return out;
}

MatrixXcd ExcitationProblem::raw_norm_matrix(double p) const { return assemble_full(norm_mpo_, norm_forms_, p); }

MatrixXcd ExcitationProblem::raw_hamiltonian_matrix(double p) const { return assemble_full(ham_mpo_, ham_forms_, p); }

MatrixXcd ExcitationProblem::norm_matrix(double p) const {
  const MatrixXcd pi = projector();
  return pi.adjoint() * raw_norm_matrix(p) * pi;
}

MatrixXcd ExcitationProblem::hamiltonian_matrix(double p) const {
  const MatrixXcd pi = projector();
  return pi.adjoint() * raw_hamiltonian_matrix(p) * pi;
}

ExcitationLevels ExcitationProblem::solve(double p, double rank_tol, bool want_vectors) const {
  const VectorXcd ground = ground_block();
  const VectorXcd w = constraint();
  const std::size_t nb = blocks_.size();
  std::vector<MatrixXcd> hams(nb), pis(nb);
  std::vector<Eigen::SelfAdjointEigenSolver<MatrixXcd>> norms(nb);
  ExcitationLevels out;
  double top = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& rows = blocks_[b];
    const auto n = static_cast<Index>(rows.size());
    pis[b] = MatrixXcd::Identity(n, n) - ground(rows) * w(rows).transpose();
    const MatrixXcd nm = pis[b].adjoint() * assemble_block(norm_mpo_, norm_forms_, p, b) * pis[b];
    hams[b] = pis[b].adjoint() * assemble_block(ham_mpo_, ham_forms_, p, b) * pis[b];
    out.hermiticity_residual = std::max({out.hermiticity_residual, hermiticity(nm), hermiticity(hams[b])});
    norms[b].compute(0.5 * (nm + nm.adjoint()));
    if (norms[b].info() != Eigen::Success) throw_numerical("excitation solve: norm eigensolver failed");
    if (n > 0) top = std::max(top, norms[b].eigenvalues().maxCoeff());
  }
  if (out.hermiticity_residual > 1e-9) throw_numerical("excitation solve: assembled matrices are not Hermitian");
  if (!(top > 0.0)) throw_numerical("excitation solve: norm matrix vanishes");

  std::vector<std::pair<double, int>> levels;
  std::vector<VectorXcd> vecs;
  for (std::size_t b = 0; b < nb; ++b) {
    if (blocks_[b].empty()) continue;
    const Solved s = solve_on_range(norms[b], 0.5 * (hams[b] + hams[b].adjoint()), rank_tol * top, want_vectors);
    for (std::size_t j = 0; j < s.energies.size(); ++j) {
      levels.emplace_back(s.energies[j], static_cast<int>(levels.size()));
      if (want_vectors) {
        VectorXcd full = VectorXcd::Zero(dim_);
        full(blocks_[b]) = pis[b] * s.vectors.col(static_cast<Index>(j));
        vecs.push_back(std::move(full));
      }
      out.charges.push_back(block_charges_[b]);
    }
  }
  std::vector<int> order(levels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return levels[a].first < levels[b].first; });
  out.rank = static_cast<int>(levels.size());
  out.energies.resize(out.rank);
  std::vector<int> charges(out.rank);
  if (want_vectors) out.vectors.resize(dim_, out.rank);
  for (int i = 0; i < out.rank; ++i) {
    out.energies(i) = levels[order[i]].first;
    charges[i] = out.charges[order[i]];
    if (want_vectors) out.vectors.col(i) = vecs[order[i]];
  }
  out.charges = std::move(charges);
  out.lowest_degeneracy = out.rank ? count_lowest(out.energies) : 0;
  return out;
}

namespace {

// Trigonometric interpolant of samples f(2 pi j / P).
class TrigInterpolant {
 public:
  explicit TrigInterpolant(const std::vector<double>& samples) : n_(static_cast<int>(samples.size())) {
    coeff_.resize(n_);
    for (int m = 0; m < n_; ++m) {
      cplx acc = 0.0;
      for (int j = 0; j < n_; ++j) acc += samples[j] * std::polar(1.0, -2.0 * kPi * m * j / n_);
      coeff_[m] = acc / static_cast<double>(n_);
    }
  }
  double operator()(double x) const {
    double acc = coeff_[0].real();
    for (int m = 1; m < n_; ++m) {
      if (n_ % 2 == 0 && m == n_ / 2) {
        acc += coeff_[m].real() * std::cos(m * x);
        continue;
      }
      const int freq = m < n_ / 2.0 ? m : m - n_;
      acc += (coeff_[m] * std::polar(1.0, freq * x)).real();
    }
    return acc;
  }

 private:
  int n_;
  std::vector<cplx> coeff_;
};

}  // namespace

namespace {

// Grid scan over [0, 2pi) followed by golden-section refinement around the best node.
template <class F>
double periodic_minimum(int n, const F& total) {
  const double h = 2.0 * kPi / n;
  int best = 0;
  double best_value = total(0.0);
  for (int j = 1; j < n; ++j) {
    const double v = total(j * h);
    if (v < best_value) {
      best_value = v;
      best = j;
    }
  }
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = (best - 1) * h, hi = (best + 1) * h;
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  double f1 = total(x1), f2 = total(x2);
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = total(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = total(x2);
    }
  }
  return std::min(best_value, std::min(f1, f2));
}

}  // namespace

double min_convolution(const std::vector<double>& f, const std::vector<double>& g, double p) {
  const int n = static_cast<int>(f.size());
  if (n < 2 || g.size() != f.size()) throw_invalid("min_convolution: need matching grids of at least two points");
  const TrigInterpolant fi(f), gi(g);
  return periodic_minimum(n, [&](double k) { return fi(k) + gi(p - k); });
}

ContinuumEdges continuum_edges(const std::vector<double>& band) {
  const int n = static_cast<int>(band.size());
  if (n < 2) throw_invalid("continuum_edges: need at least two band points");
  const TrigInterpolant fi(band);
  // The two-magnon edge has kinks, so the three-magnon edge minimises over it
  // directly rather than over an interpolant of its grid values.
  auto two = [&](double q) { return periodic_minimum(n, [&](double k) { return fi(k) + fi(q - k); }); };
  ContinuumEdges out;
  out.momentum.resize(n);
  out.two_magnon.resize(n);
  out.three_magnon.resize(n);
  for (int j = 0; j < n; ++j) {
    const double p = 2.0 * kPi * j / n;
    out.momentum[j] = p;
    out.two_magnon[j] = two(p);
    out.three_magnon[j] = periodic_minimum(n, [&](double k) { return fi(k) + two(p - k); });
  }
  return out;
}

}  // namespace quasix::mps
