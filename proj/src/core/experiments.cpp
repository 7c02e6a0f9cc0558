#include "core/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <sstream>

#include "core/ed.hpp"
#include "core/filter.hpp"
#include "core/models.hpp"
#include "core/mps.hpp"
#include "core/parallel.hpp"
#include "core/spectral.hpp"

#ifndef QUASIX_VERSION
#define QUASIX_VERSION "0.0.0"
#endif

namespace quasix::experiments {

namespace {

const std::set<std::string> kCommands = {"spectrum", "filter", "dispersion", "converge", "spectralfn", "lrcheck"};

Json defaults_for(const std::string& command) {
  Json d;
  d["command"] = command;
  if (command == "spectrum") {
    d["model"] = "tfim";
    d["params"] = "";
    d["sites"] = 8;
    d["mu"] = 1.0;
    d["mode"] = "full";
    d["levels"] = 4;
  } else if (command == "filter") {
    d["model"] = "tfim";
    d["params"] = "g=2";
    d["sites"] = 12;
    d["mu"] = 1.0;
    d["momentum_index"] = -1;
    d["p"] = "pi";
    d["alpha"] = 0;
    d["op"] = "sz";
    d["site"] = 0;
    d["seed"] = 7;
    d["lmax"] = 5;
    d["c"] = 1.0;
    d["delta_e_scale"] = 1.0;
  } else if (command == "dispersion") {
    d["model"] = "aklt";
    d["params"] = "";
    d["mu"] = 1.0;
    d["lmax"] = 5;
    d["pgrid"] = 64;
    d["levels"] = 1;
    d["rank_tol"] = 1e-10;
    d["ed_sites"] = 0;
  } else if (command == "converge") {
    d["model"] = "aklt";
    d["params"] = "";
    d["mu"] = 1.0;
    d["p"] = Json::array({"0.4pi", "0.6pi", "0.8pi", "pi"});
    d["lmax"] = 6;
    d["rank_tol"] = 1e-10;
  } else if (command == "spectralfn") {
    d["model"] = "tfim";
    d["params"] = "g=2";
    d["sites"] = 10;
    d["mu"] = 1.0;
    d["op"] = "sz";
    d["site"] = 0;
    d["seed"] = 7;
    d["broadening"] = 0.0;
    d["points"] = 2001;
    d["momentum_index"] = -1;
  } else if (command == "lrcheck") {
    d["model"] = "tfim";
    d["params"] = "g=2";
    d["sites"] = 10;
    d["mu"] = 1.0;
    d["op"] = "sz";
    d["distances"] = Json::array({2, 3, 4});
    d["times"] = Json::array({0.1, 0.2, 0.4});
    d["norm_ops"] = Json::array({"sz", "random2"});
    d["seed"] = 7;
  }
  return d;
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

template <typename T>
T get(const Json& cfg, const char* key) {
  return cfg.at(key).get<T>();
}

models::LocalHamiltonian build(const Json& cfg, int sites) {
  return models::build_model(models::parse_model_kind(get<std::string>(cfg, "model")),
                             models::parse_params(get<std::string>(cfg, "params")), sites);
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void base_meta(RunOutput& out, const Json& cfg, const std::string& model, double mu, double s) {
  out.meta["command"] = cfg.at("command");
  out.meta["config"] = cfg;
  out.meta["model"] = model;
  out.meta["mu"] = mu;
  out.meta["s"] = s;
  out.meta["v_lr"] = nullptr;
  out.meta["delta_e"] = nullptr;
  out.meta["gap"] = nullptr;
  out.meta["version"] = QUASIX_VERSION;
}

// ---------------------------------------------------------------- spectrum

RunOutput run_spectrum(const Json& cfg) {
  const int sites = get<int>(cfg, "sites");
  const auto h = build(cfg, sites);
  const std::string mode = get<std::string>(cfg, "mode");
  if (mode != "full" && mode != "lowest") throw_invalid("spectrum: mode must be 'full' or 'lowest'");
  const int levels = get<int>(cfg, "levels");
  if (levels < 1) throw_invalid("spectrum: levels must be positive");
  const auto spec = ed::solve_chain(h, mode == "full" ? ed::SolveMode::Full : ed::SolveMode::LowestK, levels);

  RunOutput out;
  Table t{"spectrum", {"p_index", "p", "alpha", "energy"}, {}};
  Json dims = Json::array();
  for (const auto& e : spec.eigen) {
    for (Eigen::Index a = 0; a < e.energies.size(); ++a)
      t.rows.push_back({double(e.momentum_index), e.momentum, double(a), e.energies(a)});
    dims.push_back(spec.sectors[e.momentum_index].dim());
  }
  out.tables.push_back(std::move(t));
  const double mu = get<double>(cfg, "mu");
  base_meta(out, cfg, h.name(), mu, models::lr_constant_s(h, mu));
  out.meta["gap"] = spec.gap;
  out.meta["results"] = {{"ground_energy", spec.ground_energy}, {"ground_sector", spec.ground_sector},
                         {"sector_dims", dims}, {"full", mode == "full"}};
  return out;
}

// ---------------------------------------------------------------- filter

RunOutput run_filter(const Json& cfg) {
  const int sites = get<int>(cfg, "sites");
  const auto h = build(cfg, sites);
  int k = get<int>(cfg, "momentum_index");
  Json mapping = nullptr;
  if (k < 0) {
    const std::string text = get<std::string>(cfg, "p");
    const double p = parse_momentum(text);
    k = nearest_momentum_index(p, sites);
    mapping = {{"requested", text}, {"requested_value", p}, {"momentum_index", k}, {"p", 2.0 * kPi * k / sites}};
  }
  if (k >= sites) throw_invalid("filter: momentum index out of range");

  const auto spec = ed::solve_chain(h, ed::SolveMode::Full);
  const auto basis = ed::real_eigenbasis(spec);
  const auto op = ed::named_operator(get<std::string>(cfg, "op"), h.local_dim(), sites, get<int>(cfg, "site"),
                                     get<std::uint64_t>(cfg, "seed"));
  filter::PipelineOptions opts;
  opts.momentum_index = k;
  opts.alpha = get<int>(cfg, "alpha");
  opts.ell_max = get<int>(cfg, "lmax");
  opts.mu = get<double>(cfg, "mu");
  opts.c = get<double>(cfg, "c");
  opts.delta_e_scale = get<double>(cfg, "delta_e_scale");
  const auto res = filter::run_filter_pipeline(h, spec, basis, op, opts);

  RunOutput out;
  Table t{"filter",
          {"ell", "T", "q", "overlap", "norm", "seminorm", "F", "bound", "f", "DX", "loc_error", "loc_bound", "F_O2",
           "nodes", "bound_defined", "beyond_ell0", "bound_violated"},
          {}};
  bool violated = false;
  for (const auto& r : res.rows) {
    t.rows.push_back({double(r.ell), r.time, r.q, r.overlap, r.norm, r.seminorm, r.fidelity, r.bound, r.weight, r.d_x,
                      r.localization_error, r.localization_bound, r.fidelity_o2, double(r.quadrature_nodes),
                      double(r.bound_defined), double(r.beyond_ell0), double(r.bound_violated)});
    violated = violated || r.bound_violated;
  }
  out.tables.push_back(std::move(t));
  base_meta(out, cfg, h.name(), opts.mu, res.s);
  out.meta["v_lr"] = res.v_lr;
  out.meta["delta_e"] = res.delta_e;
  out.meta["gap"] = res.gap;
  Json r;
  r["momentum_index"] = k;
  r["momentum"] = 2.0 * kPi * k / sites;
  r["momentum_mapping"] = mapping;
  r["target_energy"] = res.target_energy;
  r["spectral_weight"] = res.weight;
  r["baseline_fidelity"] = res.baseline_fidelity;
  r["ell0"] = res.ell0 ? Json(*res.ell0) : Json(nullptr);
  r["fidelity_nondecreasing"] = res.fidelity_nondecreasing;
  r["decay_rate"] = finite_or_null(res.decay_rate);
  r["decay_rate_guarantee"] = res.delta_e / (2.0 * res.v_lr);
  r["bound_violated"] = violated;
  r["constant_convention"] = "C(Y) and D_X(ell) taken with prefactor 1";
  out.meta["results"] = r;
  return out;
}

// ---------------------------------------------------------------- mps

void require_aklt(const Json& cfg) {
  if (models::parse_model_kind(get<std::string>(cfg, "model")) != models::ModelKind::Aklt)
    throw_invalid("the excitation ansatz runs over the exact AKLT ground state only (--model aklt)");
  if (!models::parse_params(get<std::string>(cfg, "params")).empty())
    throw_invalid("the AKLT model takes no parameters");
}

double aklt_ed_reference(int sites) {
  const auto h = models::build_model(models::ModelKind::Aklt, {}, sites);
  auto table = std::make_shared<const ed::OrbitTable>(sites, 3);
  if (sites % 2 != 0) throw_invalid("AKLT reference needs an even chain for p = pi");
  const ed::MomentumSector sector(table, sites / 2);
  const auto e = ed::eigensolve(ed::sector_hamiltonian(h, sector), ed::SolveMode::LowestK, 1, false);
  return e.energies(0);
}

struct LevelGroup {
  double energy;
  int degeneracy;
};

std::vector<LevelGroup> group_levels(const VectorXd& e, int max_groups) {
  std::vector<LevelGroup> out;
  for (Eigen::Index i = 0; i < e.size() && static_cast<int>(out.size()) < max_groups;) {
    Eigen::Index j = i;
    while (j < e.size() && e(j) - e(i) < 1e-8) ++j;
    out.push_back({e(i), static_cast<int>(j - i)});
    i = j;
  }
  return out;
}

RunOutput run_dispersion(const Json& cfg) {
  require_aklt(cfg);
  const int lmax = get<int>(cfg, "lmax"), pgrid = get<int>(cfg, "pgrid"), levels = get<int>(cfg, "levels");
  const double rank_tol = get<double>(cfg, "rank_tol");
  if (lmax < 1 || lmax > 6) throw_invalid("dispersion: lmax must be in 1..6");
  if (pgrid < 2) throw_invalid("dispersion: pgrid must be at least 2");
  if (levels < 1) throw_invalid("dispersion: levels must be positive");
  const auto tensor = mps::aklt_tensor();
  const MatrixXcd bond = models::aklt_bond_projector();

  RunOutput out;
  Table t{"dispersion", {"p", "ell", "level", "energy", "degeneracy", "rank"}, {}};
  std::vector<double> band(pgrid);
  Json at_pi = Json::array();
  double hermiticity = 0.0;
  for (int ell = 1; ell <= lmax; ++ell) {
    const mps::ExcitationProblem prob(tensor, bond, ell);
    std::vector<mps::ExcitationLevels> res(pgrid);
    parallel_for(pgrid, [&](int j) { res[j] = prob.solve(2.0 * kPi * j / pgrid, rank_tol); });
    for (int j = 0; j < pgrid; ++j) {
      const auto groups = group_levels(res[j].energies, levels);
      for (std::size_t g = 0; g < groups.size(); ++g)
        t.rows.push_back({2.0 * kPi * j / pgrid, double(ell), double(g), groups[g].energy,
                          double(groups[g].degeneracy), double(res[j].rank)});
      hermiticity = std::max(hermiticity, res[j].hermiticity_residual);
      if (ell == lmax) band[j] = res[j].energies(0);
      if (2 * j == pgrid)
        at_pi.push_back({{"ell", ell}, {"energy", res[j].energies(0)}, {"degeneracy", res[j].lowest_degeneracy},
                         {"rank", res[j].rank}});
    }
  }
  out.tables.push_back(std::move(t));

  const auto edges = mps::continuum_edges(band);
  Table c{"continuum", {"p", "one_magnon", "two_magnon", "three_magnon"}, {}};
  for (int j = 0; j < pgrid; ++j) c.rows.push_back({edges.momentum[j], band[j], edges.two_magnon[j], edges.three_magnon[j]});
  out.tables.push_back(std::move(c));

  const double mu = get<double>(cfg, "mu");
  base_meta(out, cfg, "aklt", mu, models::lr_constant_s(models::build_model(models::ModelKind::Aklt, {}, 4), mu));
  Json r;
  r["bond_dim"] = tensor.bond_dim;
  r["at_pi"] = at_pi;
  r["sma_bound_at_pi"] = 10.0 / 27.0;
  r["max_hermiticity_residual"] = hermiticity;
  r["rank_tol"] = rank_tol;
  const int ed_sites = get<int>(cfg, "ed_sites");
  r["ed_reference"] = ed_sites > 0 ? Json({{"sites", ed_sites}, {"energy", aklt_ed_reference(ed_sites)}}) : Json(nullptr);
  out.meta["results"] = r;
  return out;
}

RunOutput run_converge(const Json& cfg) {
  require_aklt(cfg);
  const int lmax = get<int>(cfg, "lmax");
  const double rank_tol = get<double>(cfg, "rank_tol");
  if (lmax < 2 || lmax > 6) throw_invalid("converge: lmax must be in 2..6");
  std::vector<std::string> labels;
  std::vector<double> momenta;
  for (const auto& v : cfg.at("p")) {
    labels.push_back(v.get<std::string>());
    momenta.push_back(parse_momentum(labels.back()));
  }
  if (momenta.empty()) throw_invalid("converge: no momenta given");
  const auto tensor = mps::aklt_tensor();
  const MatrixXcd bond = models::aklt_bond_projector();
  const auto np = static_cast<int>(momenta.size());
  std::vector<std::vector<double>> emin(np, std::vector<double>(lmax));
  for (int ell = 1; ell <= lmax; ++ell) {
    const mps::ExcitationProblem prob(tensor, bond, ell);
    parallel_for(np, [&](int j) { emin[j][ell - 1] = prob.solve(momenta[j], rank_tol).energies(0); });
  }

  // Mean successive-difference ratio per momentum; the one closest to 1 converges slowest.
  std::vector<double> mean_ratio(np, 0.0);
  Json per_p = Json::array();
  int borderline = 0;
  for (int j = 0; j < np; ++j) {
    double log_sum = 0.0;
    int count = 0;
    bool positive = true;
    Json ratios = Json::array();
    for (int ell = 1; ell + 1 < lmax; ++ell) {
      const double d0 = emin[j][ell - 1] - emin[j][ell];
      const double d1 = emin[j][ell] - emin[j][ell + 1];
      if (d0 <= 0.0 || d1 <= 0.0) {
        positive = false;
        ratios.push_back(nullptr);
        continue;
      }
      ratios.push_back(d1 / d0);
      log_sum += std::log(d1 / d0);
      ++count;
    }
    mean_ratio[j] = count ? std::exp(log_sum / count) : 1.0;
    if (std::abs(1.0 - mean_ratio[j]) < std::abs(1.0 - mean_ratio[borderline])) borderline = j;
    per_p.push_back({{"p", labels[j]}, {"value", momenta[j]}, {"ratios", ratios}, {"mean_ratio", mean_ratio[j]},
                     {"all_differences_positive", positive}, {"emin_at_lmax", emin[j][lmax - 1]}});
  }

  RunOutput out;
  Table t{"converge", {"p", "ell", "Emin", "diff_to_next", "borderline"}, {}};
  for (int j = 0; j < np; ++j)
    for (int ell = 1; ell < lmax; ++ell)
      t.rows.push_back({momenta[j], double(ell), emin[j][ell - 1], emin[j][ell - 1] - emin[j][ell],
                        double(j == borderline)});
  out.tables.push_back(std::move(t));
  const double mu = get<double>(cfg, "mu");
  base_meta(out, cfg, "aklt", mu, models::lr_constant_s(models::build_model(models::ModelKind::Aklt, {}, 4), mu));
  out.meta["results"] = {{"momenta", per_p}, {"borderline", labels[borderline]},
                         {"momentum_mapping", "exact; the ansatz lives in the thermodynamic limit"}};
  return out;
}

// ---------------------------------------------------------------- spectral

RunOutput run_spectralfn(const Json& cfg) {
  const int sites = get<int>(cfg, "sites");
  const auto h = build(cfg, sites);
  const auto spec = ed::solve_chain(h, ed::SolveMode::Full);
  const auto op = ed::named_operator(get<std::string>(cfg, "op"), h.local_dim(), sites, get<int>(cfg, "site"),
                                     get<std::uint64_t>(cfg, "seed"));
  double eps = get<double>(cfg, "broadening");
  if (eps < 0.0) throw_invalid("spectralfn: broadening must be positive");
  if (eps == 0.0) eps = spectral::default_broadening(spec.gap);
  double e_max = 0.0;
  for (const auto& e : spec.eigen) e_max = std::max(e_max, e.energies.maxCoeff());
  const auto grid = spectral::default_grid(spec.gap, e_max, get<int>(cfg, "points"));

  std::vector<int> ks;
  const int chosen = get<int>(cfg, "momentum_index");
  if (chosen >= sites) throw_invalid("spectralfn: momentum index out of range");
  if (chosen >= 0)
    ks.push_back(chosen);
  else
    for (int k = 0; k < sites; ++k) ks.push_back(k);

  const auto nk = static_cast<int>(ks.size());
  std::vector<spectral::SpectralLine> lines(nk);
  std::vector<std::vector<spectral::Residue>> residues(nk);
  std::vector<double> norms(nk);
  parallel_for(nk, [&](int i) {
    const auto& sector = spec.eigen[ks[i]];
    const VectorXcd phi = ed::momentum_state(op, spec.sectors[ks[i]], spec.ground_state);
    norms[i] = phi.squaredNorm();
    residues[i] = spectral::peak_weights(phi, sector);
    lines[i] = spectral::dynamic_correlation(phi, sector, grid, eps);
  });

  RunOutput out;
  Table t{"spectralfn", {"p", "omega", "reS", "imD", "S"}, {}};
  Table rt{"residues", {"p", "energy", "weight"}, {}};
  Json per_p = Json::array();
  for (int i = 0; i < nk; ++i) {
    const auto& line = lines[i];
    double s_min = 0.0;
    for (std::size_t w = 0; w < grid.size(); ++w) {
      t.rows.push_back({line.momentum, grid[w], line.correlation[w].real(), line.correlation[w].imag(), line.spectrum[w]});
      s_min = std::min(s_min, line.spectrum[w]);
    }
    std::size_t dominant = 0;
    double total = 0.0;
    for (std::size_t a = 0; a < residues[i].size(); ++a) {
      rt.rows.push_back({line.momentum, residues[i][a].energy, residues[i][a].weight});
      total += residues[i][a].weight;
      if (residues[i][a].weight > residues[i][dominant].weight) dominant = a;
    }
    const double integral = spectral::integrated_weight(line);
    per_p.push_back({{"p_index", ks[i]},
                     {"p", line.momentum},
                     {"norm_squared", norms[i]},
                     {"residue_total", total},
                     {"sum_rule_relative_error", norms[i] > 0.0 ? std::abs(integral - norms[i]) / norms[i] : 0.0},
                     {"kramers_kronig_residual", spectral::kramers_kronig_residual(line)},
                     {"min_spectrum", s_min},
                     {"dominant_alpha", dominant},
                     {"dominant_energy", residues[i].empty() ? 0.0 : residues[i][dominant].energy},
                     {"dominant_weight", residues[i].empty() ? 0.0 : residues[i][dominant].weight}});
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(rt));
  const double mu = get<double>(cfg, "mu");
  base_meta(out, cfg, h.name(), mu, models::lr_constant_s(h, mu));
  out.meta["gap"] = spec.gap;
  out.meta["results"] = {{"broadening", eps}, {"omega_min", grid.front()}, {"omega_max", grid.back()},
                         {"momenta", per_p}};
  return out;
}

// ---------------------------------------------------------------- lrcheck

RunOutput run_lrcheck(const Json& cfg) {
  const int sites = get<int>(cfg, "sites");
  const auto h = build(cfg, sites);
  const auto spec = ed::solve_chain(h, ed::SolveMode::Full);
  const auto basis = ed::real_eigenbasis(spec);
  const double mu = get<double>(cfg, "mu");
  const auto lr = models::lr_constants(h, mu, spec.gap);
  const int d = h.local_dim();
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const std::string op_name = get<std::string>(cfg, "op");
  const auto a = ed::named_operator(op_name, d, sites, 0, seed);

  RunOutput out;
  Table t{"lrcheck", {"dist", "t", "lhs", "rhs", "holds"}, {}};
  bool all_lr = true;
  for (const auto& dist_json : cfg.at("distances")) {
    const int dist = dist_json.get<int>();
    const int b_site = a.region.sites().back() + dist;
    if (dist < 1) throw_invalid("lrcheck: distances must be positive");
    const auto b = ed::named_operator(op_name, d, sites, b_site % sites, seed + 1);
    if (models::distance(a.region, b.region) != dist) throw_invalid("lrcheck: distance wraps around the ring");
    for (const auto& time_json : cfg.at("times")) {
      const double time = time_json.get<double>();
      const auto check = ed::lr_commutator_check(a, b, time, basis, lr, d);
      t.rows.push_back({double(dist), time, check.lhs, check.rhs, double(check.holds())});
      all_lr = all_lr && check.holds();
    }
  }

  Table nt{"normbound", {"op_index", "p_index", "p", "lhs", "rhs", "holds"}, {}};
  Json ops = Json::array();
  bool all_norm = true;
  int index = 0;
  for (const auto& name_json : cfg.at("norm_ops")) {
    const auto op = ed::named_operator(name_json.get<std::string>(), d, sites, 0, seed);
    bool op_ok = true;
    double worst = 0.0;
    for (int k = 0; k < sites; ++k) {
      const auto check = ed::norm_bound_check(op, spec.sectors[k], spec.ground_state, spec.gap);
      nt.rows.push_back({double(index), double(k), spec.sectors[k].momentum(), check.lhs, check.rhs,
                         double(check.holds())});
      op_ok = op_ok && check.holds();
      if (check.rhs > 0.0) worst = std::max(worst, check.lhs / check.rhs);
    }
    ops.push_back({{"index", index}, {"op", op.label}, {"holds_everywhere", op_ok}, {"max_ratio", worst}});
    all_norm = all_norm && op_ok;
    ++index;
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(nt));
  base_meta(out, cfg, h.name(), mu, lr.s);
  out.meta["v_lr"] = lr.v_lr;
  out.meta["gap"] = spec.gap;
  out.meta["results"] = {{"lr_bound_holds", all_lr}, {"norm_bound_holds", all_norm}, {"norm_ops", ops},
                         {"norm_bound_delta", "Delta E"}};
  return out;
}

}  // namespace

RunOutput run_checked(const Json& cfg);

Json normalize_config(const Json& config) {
  if (!config.is_object()) throw_invalid("config must be a JSON object");
  if (!config.contains("command") || !config.at("command").is_string()) throw_invalid("config needs a command");
  const std::string command = config.at("command").get<std::string>();
  if (!kCommands.count(command)) throw_invalid("unknown command '" + command + "'");
  Json out = defaults_for(command);
  for (const auto& [key, value] : config.items()) {
    if (!out.contains(key)) throw_invalid(command + ": unknown option '" + key + "'");
    if (value.is_null()) continue;
    const Json& ref = out.at(key);
    if (!same_kind(ref, value)) throw_invalid(command + ": option '" + key + "' has the wrong type");
    out[key] = ref.is_number_float() ? Json(value.get<double>()) : value;
  }
  if (out.contains("sites") && out.at("sites").get<int>() < 3) throw_invalid("sites must be at least 3");
  if (out.contains("mu") && !(out.at("mu").get<double>() > 0.0)) throw_invalid("mu must be positive");
  return out;
}

RunOutput run(const Json& config) {
  try {
    return run_checked(normalize_config(config));
  } catch (const Json::exception& e) {
    throw_invalid(std::string("config: ") + e.what());
  }
}

RunOutput run_checked(const Json& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::string command = cfg.at("command").get<std::string>();
  RunOutput out;
  if (command == "spectrum")
    out = run_spectrum(cfg);
  else if (command == "filter")
    out = run_filter(cfg);
  else if (command == "dispersion")
    out = run_dispersion(cfg);
  else if (command == "converge")
    out = run_converge(cfg);
  else if (command == "spectralfn")
    out = run_spectralfn(cfg);
  else
    out = run_lrcheck(cfg);
  for (const auto& t : out.tables)
    for (const auto& row : t.rows)
      for (double v : row)
        if (!std::isfinite(v)) throw_numerical(command + ": non-finite value in table '" + t.name + "'");
  out.meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double parse_momentum(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw_invalid("empty momentum");
  auto number = [&](const std::string& part) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size()) throw_invalid("bad momentum '" + text + "'");
    return v;
  };
  double denom = 1.0;
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    denom = number(s.substr(slash + 1));
    if (denom == 0.0) throw_invalid("bad momentum '" + text + "'");
    s = s.substr(0, slash);
  }
  const auto pi = s.find("pi");
  double value;
  if (pi != std::string::npos) {
    if (pi + 2 != s.size()) throw_invalid("bad momentum '" + text + "'");
    std::string coeff = s.substr(0, pi);
    if (coeff.empty() || coeff == "+")
      value = kPi;
    else if (coeff == "-")
      value = -kPi;
    else
      value = number(coeff.front() == '+' ? coeff.substr(1) : coeff) * kPi;
  } else {
    value = number(s.front() == '+' ? s.substr(1) : s);
  }
  return value / denom;
}

int nearest_momentum_index(double p, int sites) {
  if (sites < 1) throw_invalid("nearest_momentum_index: no sites");
  const double k = p * sites / (2.0 * kPi);
  const long r = std::lround(k);
  return static_cast<int>(((r % sites) + sites) % sites);
}

std::string csv_body(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += '\n';
  char buf[64];
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw_invalid("csv_body: ragged table '" + table.name + "'");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!std::isfinite(row[i])) throw_numerical("csv_body: non-finite value in '" + table.name + "'");
      const double v = row[i] == 0.0 ? 0.0 : row[i];
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string csv_preamble(const RunOutput& out) {
  std::ostringstream os;
  os << "# quasix " << out.meta.value("version", "") << "\n";
  os << "# command: " << out.meta.at("command").get<std::string>() << "\n";
  os << "# config: " << out.meta.at("config").dump() << "\n";
  for (const char* key : {"model", "mu", "s", "v_lr", "delta_e", "gap"})
    if (out.meta.contains(key)) os << "# " << key << ": " << out.meta.at(key).dump() << "\n";
  return os.str();
}

}  // namespace quasix::experiments
