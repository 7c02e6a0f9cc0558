#pragma once

#include <vector>

#include "core/common.hpp"

namespace quasix::mps {

/// Translation-invariant MPS tensor A^s (D x D for each physical index s).
/// Optional U(1) labels are stored doubled (2 S^z) so spin-1/2 bonds stay integral;
/// A^s_{ab} != 0 requires bond_charge[a] = phys_charge[s] + bond_charge[b].
struct MpsTensor {
  int bond_dim = 0;
  int phys_dim = 0;
  std::vector<MatrixXcd> a;
  std::vector<int> bond_charge;
  std::vector<int> phys_charge;

  bool has_charges() const { return !bond_charge.empty() && !phys_charge.empty(); }
};

/// AKLT ground state, D = 2, physical order m = +1, 0, -1.
MpsTensor aklt_tensor();

/// Transfer superoperators on column-major vec of D x D matrices.
/// Right action R -> sum_{s',s} op(s',s) A^s R A^{s'dagger}; left action
/// L -> sum op(s',s) A^{s'dagger} L A^s. An empty op means the identity.
MatrixXcd transfer_right(const MpsTensor& t, const MatrixXcd& op = MatrixXcd());
MatrixXcd transfer_left(const MpsTensor& t, const MatrixXcd& op = MatrixXcd());
MatrixXcd apply_right(const MpsTensor& t, const MatrixXcd& r, const MatrixXcd& op = MatrixXcd());
MatrixXcd apply_left(const MpsTensor& t, const MatrixXcd& l, const MatrixXcd& op = MatrixXcd());

/// Transfer spectrum sorted by decreasing modulus.
VectorXcd transfer_spectrum(const MpsTensor& t);

struct FixedPoints {
  MatrixXcd l;  ///< left fixed point, Hermitian positive
  MatrixXcd r;  ///< right fixed point, Hermitian positive, tr(l r) = 1
  cplx leading = 1.0;
  double second = 0.0;  ///< modulus of the subleading eigenvalue
};

FixedPoints transfer_fixed_points(const MpsTensor& t);

/// Solves (1 - e^{ip} E~) x = P b with E~ = E - |r)(l| and P = 1 - |r)(l|.
/// With projected = false it solves (1 - e^{ip} E) x = b instead (p != 0 only).
MatrixXcd regularized_resolvent_apply(const MpsTensor& t, const FixedPoints& fp, double p, const MatrixXcd& b,
                                      bool projected = true);

/// Two-site Hamiltonian term as an operator-Schmidt MPO h = sum_k L_k (x) R_k,
/// after subtracting the bond energy density of the MPS.
struct BondMpo {
  std::vector<MatrixXcd> left;
  std::vector<MatrixXcd> right;
  double energy_density = 0.0;  ///< subtracted value
};

BondMpo bond_mpo(const MpsTensor& t, const FixedPoints& fp, const MatrixXcd& h);

/// <h> per bond in the MPS.
double bond_energy(const MpsTensor& t, const FixedPoints& fp, const MatrixXcd& h);

struct ExcitationLevels {
  VectorXd energies;         ///< all retained generalized eigenvalues, ascending
  std::vector<int> charges;  ///< Delta Q (doubled) of each energy when blocked
  MatrixXcd vectors;         ///< block tensors (full index space), when requested
  int rank = 0;              ///< retained dimension of N_p
  int lowest_degeneracy = 0;
  double hermiticity_residual = 0.0;
};

/// Generalized eigenproblem H x = E N x on the range of N: eigenvalues of N
/// above rank_tol * max eigenvalue are kept. Energies ascending.
ExcitationLevels excitation_energies(const MatrixXcd& n, const MatrixXcd& h, double rank_tol = 1e-10,
                                     bool want_vectors = false);

/// Block excitations Phi_p[B] = sum_n e^{ipn} T_n (... A B A ...) over an
/// exact MPS ground state, with B on `ell` consecutive sites. B is indexed
/// (alpha * d^ell + sigma) * D + beta with the first block site most significant in sigma.
class ExcitationProblem {
 public:
  ExcitationProblem(MpsTensor tensor, const MatrixXcd& bond_term, int ell);

  int ell() const { return ell_; }
  Eigen::Index dim() const { return dim_; }
  const MpsTensor& tensor() const { return t_; }
  const FixedPoints& fixed_points() const { return fp_; }
  const BondMpo& mpo() const { return mpo_; }

  /// Block index sets (by Delta Q when charges are available).
  const std::vector<std::vector<Eigen::Index>>& blocks() const { return blocks_; }
  const std::vector<int>& block_charges() const { return block_charges_; }
  /// Delta Q = q_alpha - sum m(sigma) - q_beta, doubled.
  int index_charge(Eigen::Index i) const;

  /// Vectorized A^{(x) ell}, and the functional w with w^T b = (l|E^B_A|r).
  VectorXcd ground_block() const;
  VectorXcd constraint() const;
  /// Pi = 1 - ground_block w^T.
  MatrixXcd projector() const;

  /// Full matrices with Pi applied on both sides.
  MatrixXcd norm_matrix(double p) const;
  MatrixXcd hamiltonian_matrix(double p) const;
  /// Before applying Pi (valid only on inputs with w^T b = 0).
  MatrixXcd raw_norm_matrix(double p) const;
  MatrixXcd raw_hamiltonian_matrix(double p) const;

  ExcitationLevels solve(double p, double rank_tol = 1e-10, bool want_vectors = false) const;

 private:
  struct Mpo {
    int channels = 0;
    std::vector<std::vector<MatrixXcd>> w;  // w[a][b], empty when absent
    std::vector<MatrixXcd> lenv;
    std::vector<MatrixXcd> renv;
  };
  struct Forms {
    // windows[shift + ell - 1][block] for shifts -(ell-1) .. ell-1
    std::vector<std::vector<MatrixXcd>> windows;
    MatrixXcd tail_left;   // rows: index of the bra block, cols: channel * D^2
    MatrixXcd tail_right;  // rows: channel * D^2, cols: index of the ket block
    MatrixXcd tail_left_neg;
    MatrixXcd tail_right_neg;
  };

  Mpo make_identity_mpo() const;
  Mpo make_hamiltonian_mpo() const;
  std::vector<std::vector<std::vector<MatrixXcd>>> operator_strings(const Mpo& mpo) const;
  Forms build_forms(const Mpo& mpo) const;
  MatrixXcd channel_resolvent(const Mpo& mpo, double p) const;
  MatrixXcd assemble_block(const Mpo& mpo, const Forms& forms, double p, std::size_t block) const;
  MatrixXcd assemble_full(const Mpo& mpo, const Forms& forms, double p) const;

  MpsTensor t_;
  FixedPoints fp_;
  BondMpo mpo_;
  int ell_;
  int d_;
  int bond_;
  int phys_block_;  // d^ell
  Eigen::Index dim_;
  std::vector<std::vector<MatrixXcd>> strings_;  // strings_[k][sigma] = A^{s_1} ... A^{s_k}
  std::vector<std::vector<Eigen::Index>> blocks_;
  std::vector<int> block_charges_;
  std::vector<std::pair<std::size_t, Eigen::Index>> where_;  // index -> (block, position)
  Mpo norm_mpo_;
  Mpo ham_mpo_;
  Forms norm_forms_;
  Forms ham_forms_;
};

/// min_k f(k) + g(p - k) for 2 pi-periodic functions sampled on a uniform grid
/// p_j = 2 pi j / P: grid search, then trigonometric interpolation and
/// golden-section refinement.
double min_convolution(const std::vector<double>& f, const std::vector<double>& g, double p);

struct ContinuumEdges {
  std::vector<double> momentum;
  std::vector<double> two_magnon;
  std::vector<double> three_magnon;
};

/// Two- and three-magnon lower edges on the band's own grid.
ContinuumEdges continuum_edges(const std::vector<double>& band);

}  // namespace quasix::mps
