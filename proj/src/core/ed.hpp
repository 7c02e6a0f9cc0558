#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/models.hpp"

namespace quasix::ed {

/// Translation orbits of all product states of an N-site chain with local
/// dimension d. A product state is encoded as code = sum_x s_x d^x; the
/// translation T moves the content of site x to site x+1.
class OrbitTable {
 public:
  OrbitTable(int sites, int local_dim);

  int sites() const { return n_; }
  int local_dim() const { return d_; }
  std::uint64_t size() const { return size_; }

  std::uint64_t translate(std::uint64_t code) const;
  int digit(std::uint64_t code, int site) const;

  std::size_t orbit_count() const { return reps_.size(); }
  /// Orbit of a code, and the shift l with code = T^l representative.
  std::uint32_t orbit_of(std::uint64_t code) const { return orbit_[code]; }
  int shift_of(std::uint64_t code) const { return shift_[code]; }
  /// Smallest code of the orbit.
  std::uint64_t representative(std::size_t orbit) const { return reps_[orbit]; }
  int period(std::size_t orbit) const { return periods_[orbit]; }

 private:
  int n_;
  int d_;
  std::uint64_t size_;
  std::vector<std::uint32_t> orbit_;
  std::vector<std::uint8_t> shift_;
  std::vector<std::uint64_t> reps_;
  std::vector<int> periods_;
};

/// Symmetry-adapted basis |a,p> = R^{-1/2} sum_{j<R} e^{ipj} T^j |a> for p = 2 pi k / N.
/// These satisfy T|a,p> = e^{-ip}|a,p>.
class MomentumSector {
 public:
  MomentumSector(std::shared_ptr<const OrbitTable> table, int momentum_index);

  int momentum_index() const { return k_; }
  double momentum() const;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(orbits_.size()); }
  const OrbitTable& table() const { return *table_; }

  std::size_t orbit(Eigen::Index i) const { return orbits_[i]; }
  std::uint64_t representative(Eigen::Index i) const { return table_->representative(orbits_[i]); }
  int period(Eigen::Index i) const { return table_->period(orbits_[i]); }
  /// Sector index of an orbit, or -1 when the orbit is incompatible with p.
  Eigen::Index index_of_orbit(std::size_t orbit) const { return index_[orbit]; }

  /// Coefficients <a,p|v> of a product-basis vector.
  VectorXcd project(const VectorXcd& full) const;
  /// Product-basis vector of sum_a c_a |a,p>.
  VectorXcd expand(const VectorXcd& coeffs) const;

 private:
  std::shared_ptr<const OrbitTable> table_;
  int k_;
  std::vector<std::size_t> orbits_;
  std::vector<Eigen::Index> index_;
};

/// Block of H in a momentum sector (sparse, Hermitian).
SparseMatrixXcd sector_hamiltonian(const models::LocalHamiltonian& h, const MomentumSector& sector);

enum class SolveMode { Full, LowestK };

struct EigenSector {
  int momentum_index = 0;
  double momentum = 0.0;
  VectorXd energies;  ///< ascending
  MatrixXcd vectors;  ///< sector-basis eigenvectors as columns
  VectorXd residuals;
  bool full = true;
};

/// Dense diagonalization (Full) or Lanczos for the `count` lowest levels (LowestK).
EigenSector eigensolve(const SparseMatrixXcd& m, SolveMode mode, int count = 1, bool want_vectors = true);

/// All momentum sectors of a translation-invariant chain, energies shifted so
/// that the ground energy is zero.
struct ChainSpectrum {
  std::shared_ptr<const OrbitTable> table;
  std::vector<MomentumSector> sectors;
  std::vector<EigenSector> eigen;
  double ground_energy = 0.0;  ///< before the shift
  int ground_sector = 0;
  VectorXcd ground_state;      ///< product basis, normalized
  bool real_hamiltonian = false;
  double gap = 0.0;            ///< Delta E: lowest excitation over all sectors
};

ChainSpectrum solve_chain(const models::LocalHamiltonian& h, SolveMode mode, int count = 1);

/// Minimal distance from level alpha to any other level of the same sector.
double isolation_gap(const EigenSector& sector, int alpha);

/// Real orthonormal eigenbasis of a real Hamiltonian assembled from momentum
/// sectors: sectors k and -k pair up into real and imaginary parts.
struct RealEigenbasis {
  VectorXd energies;  ///< shifted, matching the column order of vectors
  MatrixXd vectors;
};

RealEigenbasis real_eigenbasis(const ChainSpectrum& spectrum);

/// A dense operator with explicit support. Factor order follows
/// region.sites(): the first site is the most significant index.
struct RegionOperator {
  models::Region region;
  MatrixXcd matrix;
  std::string label;
};

/// Builds "sz", "sx", ... on one site, "a,b" as a product on two neighbouring
/// sites, or "randomK" (seeded random Hermitian on K sites), starting at `site`.
RegionOperator named_operator(const std::string& spec, int local_dim, int lattice_size, int site = 0,
                              std::uint64_t seed = 7);

/// Random Hermitian operator with unit operator norm on a region.
RegionOperator random_hermitian(const models::Region& region, int local_dim, std::uint64_t seed);

/// Places of each local basis index in the full code: place[r] = sum_j r_j d^{site_j}.
std::vector<std::uint64_t> region_places(const models::Region& region, int local_dim);

/// Dense full-lattice matrix of a region operator.
MatrixXcd embed_region_operator(const RegionOperator& op, int lattice_size, int local_dim);

/// Applies a region operator (identity elsewhere) to a product-basis vector.
template <typename Vec>
Vec apply_region_operator(const RegionOperator& op, const Vec& v, int local_dim);

/// Normalized partial trace of a full-lattice operator onto `region`.
template <typename Mat>
RegionOperator partial_trace_localize(const Mat& full, const models::Region& region, int local_dim);

/// Phi_p[O] = |L|^{-1/2} sum_x e^{ipx} T_x (O - <O>) |Psi_0>, in sector coefficients.
VectorXcd momentum_state(const RegionOperator& op, const MomentumSector& sector, const VectorXcd& ground);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs * (1.0 + 1e-12) + 1e-14; }
};

/// || Phi_p[O_X] || against sqrt(diam X + |X|/delta) ||O_X||.
BoundCheck norm_bound_check(const RegionOperator& op, const MomentumSector& sector, const VectorXcd& ground,
                            double delta);

/// ||[e^{iHt} A e^{-iHt}, B]|| against 2||A|| ||B|| |X| e^{-mu dist}(e^{2s|t|} - 1).
BoundCheck lr_commutator_check(const RegionOperator& a, const RegionOperator& b, double t,
                               const RealEigenbasis& basis, const models::LRConstants& lr, int local_dim);

}  // namespace quasix::ed
