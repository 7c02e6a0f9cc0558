#include "core/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/linalg.hpp"

namespace quasix::models {

int periodic_distance(int x, int y, int lattice_size) {
  int delta = std::abs(x - y) % lattice_size;
  return std::min(delta, lattice_size - delta);
}

namespace {

int wrap(int x, int n) { return ((x % n) + n) % n; }

// Rotates a site list so that a contiguous arc starts at its leftmost site.
std::vector<int> arc_order(std::vector<int> sites, int n) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  const int k = static_cast<int>(sites.size());
  if (k == 0 || k == n) return sites;
  // The arc starts right after the largest gap.
  int best_gap = -1;
  int start = 0;
  for (int i = 0; i < k; ++i) {
    const int next = sites[(i + 1) % k];
    const int gap = wrap(next - sites[i], n);
    if (gap > best_gap) {
      best_gap = gap;
      start = (i + 1) % k;
    }
  }
  std::rotate(sites.begin(), sites.begin() + start, sites.end());
  return sites;
}

}  // namespace

Region::Region(std::vector<int> sites, int lattice_size) : lattice_size_(lattice_size) {
  if (lattice_size <= 0) throw_invalid("Region: lattice size must be positive");
  for (int& s : sites) s = wrap(s, lattice_size);
  sites_ = arc_order(std::move(sites), lattice_size);
}

Region Region::arc(int first, int length, int lattice_size) {
  if (length < 0 || length > lattice_size) throw_invalid("Region::arc: bad length");
  std::vector<int> s;
  for (int i = 0; i < length; ++i) s.push_back(first + i);
  return Region(std::move(s), lattice_size);
}

int Region::diameter() const {
  int diam = 0;
  for (int a : sites_)
    for (int b : sites_) diam = std::max(diam, periodic_distance(a, b, lattice_size_));
  return diam;
}

bool Region::contains(int site) const {
  return std::find(sites_.begin(), sites_.end(), wrap(site, lattice_size_)) != sites_.end();
}

bool Region::contiguous() const {
  const int k = size();
  if (k <= 1 || k == lattice_size_) return true;
  for (int i = 0; i + 1 < k; ++i)
    if (wrap(sites_[i + 1] - sites_[i], lattice_size_) != 1) return false;
  return true;
}

Region Region::ball(int ell) const {
  if (ell < 0) throw_invalid("Region::ball: negative radius");
  std::vector<int> out;
  for (int x = 0; x < lattice_size_; ++x) {
    for (int s : sites_) {
      if (periodic_distance(x, s, lattice_size_) <= ell) {
        out.push_back(x);
        break;
      }
    }
  }
  return Region(std::move(out), lattice_size_);
}

Region Region::translated(int shift) const {
  std::vector<int> s = sites_;
  for (int& x : s) x += shift;
  return Region(std::move(s), lattice_size_);
}

int distance(const Region& a, const Region& b) {
  int best = a.lattice_size_;
  for (int x : a.sites_)
    for (int y : b.sites_) best = std::min(best, periodic_distance(x, y, a.lattice_size_));
  return best;
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

MatrixXcd site_operator(const std::string& name, int d) {
  MatrixXcd op = MatrixXcd::Zero(d, d);
  if (name == "id") return MatrixXcd::Identity(d, d);
  if (d == 2) {
    // basis order: |up>, |down>
    if (name == "sx") {
      op << 0, 1, 1, 0;
    } else if (name == "sy") {
      op << 0, -kI, kI, 0;
    } else if (name == "sz") {
      op << 1, 0, 0, -1;
    } else if (name == "sp") {
      op << 0, 1, 0, 0;
    } else if (name == "sm") {
      op << 0, 0, 1, 0;
    } else {
      throw_invalid("unknown site operator '" + name + "'");
    }
    return op;
  }
  if (d == 3) {
    // basis order: m = +1, 0, -1
    const double r2 = std::sqrt(2.0);
    MatrixXcd sp = MatrixXcd::Zero(3, 3);
    sp(0, 1) = r2;
    sp(1, 2) = r2;
    if (name == "sp") return sp;
    if (name == "sm") return sp.adjoint();
    if (name == "sx") return 0.5 * (sp + sp.adjoint());
    if (name == "sy") return -0.5 * kI * (sp - sp.adjoint());
    if (name == "sz") {
      op(0, 0) = 1.0;
      op(2, 2) = -1.0;
      return op;
    }
    throw_invalid("unknown site operator '" + name + "'");
  }
  throw_invalid("site operators are defined for d = 2 and d = 3 only");
}

MatrixXcd aklt_bond_projector() {
  const MatrixXcd sx = site_operator("sx", 3), sy = site_operator("sy", 3), sz = site_operator("sz", 3);
  const MatrixXcd ss = kron(sx, sx) + kron(sy, sy) + kron(sz, sz);
  // S.S has eigenvalues -2, -1, 1 for total spin 0, 1, 2.
  return 0.5 * ss + (1.0 / 6.0) * ss * ss + (1.0 / 3.0) * MatrixXcd::Identity(9, 9);
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "aklt") return ModelKind::Aklt;
  if (name == "tfim") return ModelKind::Tfim;
  if (name == "heisenberg") return ModelKind::Heisenberg;
  throw_invalid("unknown model '" + name + "' (expected aklt|tfim|heisenberg)");
}

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Aklt:
      return "aklt";
    case ModelKind::Tfim:
      return "tfim";
    case ModelKind::Heisenberg:
      return "heisenberg";
  }
  return "unknown";
}

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw_invalid("malformed parameter '" + item + "' (expected key=value)");
    const std::string key = item.substr(0, eq);
    try {
      std::size_t used = 0;
      const double value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
      out[key] = value;
    } catch (const std::exception&) {
      throw_invalid("parameter '" + key + "' is not a number");
    }
  }
  return out;
}

LocalHamiltonian::LocalHamiltonian(std::string name, int local_dim, int lattice_size,
                                   std::vector<LocalTerm> generators, std::map<std::string, double> params)
    : name_(std::move(name)), d_(local_dim), n_(lattice_size), generators_(std::move(generators)),
      params_(std::move(params)) {
  for (const auto& t : generators_) {
    const auto expected = static_cast<Eigen::Index>(ipow(d_, static_cast<int>(t.offsets.size())));
    if (t.matrix.rows() != expected || t.matrix.cols() != expected)
      throw_invalid("LocalHamiltonian: term dimension mismatch");
    if (linalg::hermitian_residual(t.matrix) > 1e-12) throw_invalid("LocalHamiltonian: term not Hermitian");
  }
}

bool LocalHamiltonian::is_real(double tol) const {
  for (const auto& t : generators_)
    if (t.matrix.imag().cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

std::vector<LocalHamiltonian::PlacedTerm> LocalHamiltonian::terms() const {
  std::vector<PlacedTerm> out;
  for (int x = 0; x < n_; ++x) {
    for (const auto& g : generators_) {
      std::vector<int> sites;
      for (int o : g.offsets) sites.push_back(x + o);
      out.push_back({Region(std::move(sites), n_), &g.matrix});
    }
  }
  return out;
}

LocalHamiltonian build_model(ModelKind kind, const std::map<std::string, double>& params, int sites) {
  if (sites < 3) throw_invalid("lattice must have at least 3 sites");
  auto param = [&](const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        throw_invalid("unknown parameter '" + key + "' for model " + model_name(kind));
    }
  };

  std::vector<LocalTerm> gens;
  switch (kind) {
    case ModelKind::Aklt: {
      reject_unknown({});
      gens.push_back({{0, 1}, aklt_bond_projector()});
      return LocalHamiltonian("aklt", 3, sites, std::move(gens), params);
    }
    case ModelKind::Tfim: {
      reject_unknown({"g"});
      const double g = param("g", 1.0);
      if (!(g >= 0.0)) throw_invalid("tfim: field g must be non-negative");
      const MatrixXcd sz = site_operator("sz", 2), sx = site_operator("sx", 2);
      gens.push_back({{0, 1}, -kron(sz, sz)});
      gens.push_back({{0}, -g * sx});
      std::map<std::string, double> p = params;
      p["g"] = g;
      return LocalHamiltonian("tfim", 2, sites, std::move(gens), p);
    }
    case ModelKind::Heisenberg: {
      reject_unknown({"J"});
      const double j = param("J", 1.0);
      if (!(j > 0.0)) throw_invalid("heisenberg: coupling J must be positive");
      const MatrixXcd sx = site_operator("sx", 3), sy = site_operator("sy", 3), sz = site_operator("sz", 3);
      gens.push_back({{0, 1}, j * (kron(sx, sx) + kron(sy, sy) + kron(sz, sz))});
      std::map<std::string, double> p = params;
      p["J"] = j;
      return LocalHamiltonian("heisenberg", 3, sites, std::move(gens), p);
    }
  }
  throw_invalid("unhandled model kind");
}

double lr_constant_s(const LocalHamiltonian& h, double mu) {
  if (!(mu > 0.0)) throw_invalid("lr_constant_s: mu must be positive");
  std::vector<double> per_site(h.lattice_size(), 0.0);
  for (const auto& term : h.terms()) {
    const double w = linalg::operator_norm(*term.matrix) * term.region.size() * std::exp(mu * term.region.diameter());
    for (int x : term.region.sites()) per_site[x] += w;
  }
  return *std::max_element(per_site.begin(), per_site.end());
}

double lr_velocity(double delta_e, double s, double mu) {
  if (!(delta_e >= 0.0) || !(s > 0.0) || !(mu > 0.0)) throw_invalid("lr_velocity: inputs must be positive");
  return (delta_e / 2.0 + 2.0 * s) / mu;
}

LRConstants lr_constants(const LocalHamiltonian& h, double mu, double delta_e, double c) {
  LRConstants out;
  out.mu = mu;
  out.s = lr_constant_s(h, mu);
  out.v_lr = lr_velocity(delta_e, out.s, mu);
  out.c = c;
  return out;
}

}  // namespace quasix::models
