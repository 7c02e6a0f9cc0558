#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace quasix::models {

/// Periodic chain distance min(|x-y|, N-|x-y|).
int periodic_distance(int x, int y, int lattice_size);

/// A set of sites of a periodic chain. Sites are kept in arc order for
/// contiguous regions (leftmost site first), which is also the tensor-factor
/// order of any operator supported on the region.
class Region {
 public:
  Region() = default;
  Region(std::vector<int> sites, int lattice_size);

  /// Contiguous arc of `length` sites starting at `first`.
  static Region arc(int first, int length, int lattice_size);

  const std::vector<int>& sites() const { return sites_; }
  int lattice_size() const { return lattice_size_; }
  int size() const { return static_cast<int>(sites_.size()); }
  int diameter() const;
  bool contains(int site) const;
  bool contiguous() const;

  /// B_ell(X): all sites within periodic distance ell of the region.
  Region ball(int ell) const;
  Region translated(int shift) const;

  friend int distance(const Region& a, const Region& b);
  friend bool operator==(const Region& a, const Region& b) = default;

 private:
  std::vector<int> sites_;
  int lattice_size_ = 0;
};

int distance(const Region& a, const Region& b);

/// Named single-site operators: sx, sy, sz, sp, sm, id. Pauli matrices for d=2,
/// spin-1 matrices for d=3.
MatrixXcd site_operator(const std::string& name, int d);

/// Kronecker product with `a` acting on the first (most significant) factor.
MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);

/// Projector onto total spin 2 of two neighbouring spin-1 sites.
MatrixXcd aklt_bond_projector();

struct LocalTerm {
  std::vector<int> offsets;  ///< sites relative to the generating position, ascending
  MatrixXcd matrix;          ///< d^{|offsets|} square, Hermitian
};

enum class ModelKind { Aklt, Tfim, Heisenberg };

ModelKind parse_model_kind(const std::string& name);
std::string model_name(ModelKind kind);

/// Parses "g=2.0,J=1" into a key/value map.
std::map<std::string, double> parse_params(const std::string& text);

/// Translation-generated Hamiltonian H = sum_x sum_terms T_x h T_x^dagger on a ring.
class LocalHamiltonian {
 public:
  LocalHamiltonian(std::string name, int local_dim, int lattice_size, std::vector<LocalTerm> generators,
                   std::map<std::string, double> params);

  const std::string& name() const { return name_; }
  int local_dim() const { return d_; }
  int lattice_size() const { return n_; }
  const std::vector<LocalTerm>& generators() const { return generators_; }
  const std::map<std::string, double>& params() const { return params_; }
  bool is_real(double tol = 0.0) const;

  struct PlacedTerm {
    Region region;
    const MatrixXcd* matrix;
  };
  /// Every translate of every generator.
  std::vector<PlacedTerm> terms() const;

 private:
  std::string name_;
  int d_;
  int n_;
  std::vector<LocalTerm> generators_;
  std::map<std::string, double> params_;
};

/// AKLT: sum_i P^{S=2}(i,i+1). TFIM: -sum sz sz - g sum sx. Heisenberg: J sum S.S (spin 1).
LocalHamiltonian build_model(ModelKind kind, const std::map<std::string, double>& params, int sites);

struct LRConstants {
  double mu = 0.0;
  double s = 0.0;
  double v_lr = 0.0;
  double c = 1.0;
};

/// s = max_x sum_{X containing x} ||H_X|| |X| exp(mu diam X).
double lr_constant_s(const LocalHamiltonian& h, double mu);
/// v_LR = (dE/2 + 2 s) / mu.
double lr_velocity(double delta_e, double s, double mu);
LRConstants lr_constants(const LocalHamiltonian& h, double mu, double delta_e, double c = 1.0);

}  // namespace quasix::models
