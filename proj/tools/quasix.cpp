// quasix command line: runs one experiment and writes CSV plus JSON metadata.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quasix/quasix.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

// Option values are collected here; only options given on the command line or
// in the config file end up in the run config, so library defaults apply otherwise.
struct Collected {
  std::map<std::string, std::string> text;
  std::map<std::string, int> integer;
  std::map<std::string, double> real;
  std::map<std::string, std::vector<std::string>> text_list;
  std::map<std::string, std::vector<int>> int_list;
  std::map<std::string, std::vector<double>> real_list;
};

struct Binder {
  CLI::App* app;
  Collected& store;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void text(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, store.text[key], help));
  }
  void integer(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, store.integer[key], help));
  }
  void real(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, store.real[key], help));
  }
  void text_list(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, store.text_list[key], help)->delimiter(','));
  }
  void int_list(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, store.int_list[key], help)->delimiter(','));
  }
  void real_list(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, store.real_list[key], help)->delimiter(','));
  }

  Json config(const std::string& command) const {
    Json cfg;
    cfg["command"] = command;
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      if (store.text.count(key))
        cfg[key] = store.text.at(key);
      else if (store.integer.count(key))
        cfg[key] = store.integer.at(key);
      else if (store.real.count(key))
        cfg[key] = store.real.at(key);
      else if (store.text_list.count(key))
        cfg[key] = store.text_list.at(key);
      else if (store.int_list.count(key))
        cfg[key] = store.int_list.at(key);
      else
        cfg[key] = store.real_list.at(key);
    }
    return cfg;
  }
};

void model_options(Binder& b) {
  b.text("--model", "model", "aklt | tfim | heisenberg");
  b.text("--params", "params", "model parameters, e.g. g=2.0");
  b.real("--mu", "mu", "Lieb-Robinson decay rate");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::filesystem::path sibling(const std::filesystem::path& out, const std::string& suffix, const std::string& ext) {
  auto stem = out.stem().string();
  return out.parent_path() / (stem + suffix + ext);
}

Json config_from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const Json meta = Json::parse(text);
    if (!meta.contains("config")) throw std::runtime_error(path + ": no config object in metadata");
    return meta.at("config");
  }
  std::istringstream lines(text);
  std::string line;
  const std::string tag = "# config: ";
  while (std::getline(lines, line))
    if (line.rfind(tag, 0) == 0) return Json::parse(line.substr(tag.size()));
  throw std::runtime_error(path + ": no '# config:' line found");
}

int execute(const Json& config, const std::string& out_path, const std::string& meta_path) {
  quasix_run* run = nullptr;
  const std::string text = config.dump();
  const quasix_status st = quasix_run_create(text.c_str(), &run);
  if (st != QUASIX_OK) {
    std::cerr << "quasix: " << quasix_last_error() << "\n";
    return st == QUASIX_ERR_INVALID_ARGUMENT ? kExitConfig : kExitNumerical;
  }
  const std::string preamble = quasix_run_preamble(run);
  const size_t tables = quasix_run_table_count(run);
  if (out_path.empty()) {
    std::cout << preamble;
    for (size_t i = 0; i < tables; ++i) {
      if (tables > 1) std::cout << "# table: " << quasix_run_table_name(run, i) << "\n";
      std::cout << quasix_run_table_csv(run, i);
    }
  } else {
    const std::filesystem::path out(out_path);
    write_file(out, preamble + quasix_run_table_csv(run, 0));
    for (size_t i = 1; i < tables; ++i)
      write_file(sibling(out, std::string("_") + quasix_run_table_name(run, i), out.extension().string()),
                 preamble + quasix_run_table_csv(run, i));
  }
  std::string meta_target = meta_path;
  if (meta_target.empty() && !out_path.empty()) meta_target = sibling(out_path, "", ".json").string();
  if (!meta_target.empty()) write_file(meta_target, std::string(quasix_run_metadata(run)) + "\n");
  quasix_run_free(run);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Momentum-resolved quasiparticle experiments on spin chains"};
  app.set_config("--config", "", "TOML config file (command-line flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_path, meta_path;
  app.add_option("--out", out_path, "CSV output path (extra tables go next to it); stdout if omitted");
  app.add_option("--meta", meta_path, "JSON metadata path (default: next to --out)");
  app.add_flag_callback("--version", [] {
    std::cout << "quasix " << quasix_version() << "\n";
    throw CLI::Success();
  });

  std::vector<Collected> stores(6);
  std::vector<Binder> binders;
  binders.reserve(6);

  auto* spectrum = app.add_subcommand("spectrum", "energies of every momentum sector");
  binders.push_back({spectrum, stores[0], {}});
  model_options(binders.back());
  binders.back().integer("--sites", "sites", "chain length");
  binders.back().text("--mode", "mode", "full | lowest");
  binders.back().integer("--levels", "levels", "levels per sector in lowest mode");

  auto* filter = app.add_subcommand("filter", "energy-filter fidelity versus block radius");
  binders.push_back({filter, stores[1], {}});
  model_options(binders.back());
  binders.back().integer("--sites", "sites", "chain length");
  binders.back().integer("--momentum-index", "momentum_index", "target sector k (p = 2 pi k / N)");
  binders.back().text("--p", "p", "target momentum such as pi or 0.4pi (nearest grid point)");
  binders.back().integer("--alpha", "alpha", "level index inside the sector");
  binders.back().text("--op", "op", "operator: sz, sx, 'sz,sz', randomK");
  binders.back().integer("--site", "site", "first site of the operator");
  binders.back().integer("--seed", "seed", "seed for random operators");
  binders.back().integer("--lmax", "lmax", "largest block radius");
  binders.back().real("--c", "c", "Gaussian tail constant");
  binders.back().real("--delta-e-scale", "delta_e_scale", "multiplies the isolation gap used by the schedule");

  auto* dispersion = app.add_subcommand("dispersion", "block-ansatz excitation bands over the AKLT state");
  binders.push_back({dispersion, stores[2], {}});
  model_options(binders.back());
  binders.back().integer("--lmax", "lmax", "largest block length");
  binders.back().integer("--pgrid", "pgrid", "number of momenta in [0, 2 pi)");
  binders.back().integer("--levels", "levels", "distinct levels per momentum");
  binders.back().real("--rank-tol", "rank_tol", "relative cut on norm-matrix eigenvalues");
  binders.back().integer("--ed-sites", "ed_sites", "also compute the p = pi exact-diagonalization reference");

  auto* converge = app.add_subcommand("converge", "successive differences of the lowest level in the block length");
  binders.push_back({converge, stores[3], {}});
  model_options(binders.back());
  binders.back().text_list("--p", "p", "momenta, e.g. 0.4pi,0.6pi,0.8pi,pi");
  binders.back().integer("--lmax", "lmax", "largest block length");
  binders.back().real("--rank-tol", "rank_tol", "relative cut on norm-matrix eigenvalues");

  auto* spectralfn = app.add_subcommand("spectralfn", "dynamic correlation and spectral function");
  binders.push_back({spectralfn, stores[4], {}});
  model_options(binders.back());
  binders.back().integer("--sites", "sites", "chain length");
  binders.back().text("--op", "op", "operator");
  binders.back().integer("--site", "site", "first site of the operator");
  binders.back().integer("--seed", "seed", "seed for random operators");
  binders.back().real("--broadening", "broadening", "Lorentzian width (0: 2% of the gap)");
  binders.back().integer("--points", "points", "frequency grid points");
  binders.back().integer("--momentum-index", "momentum_index", "single sector (default: all)");

  auto* lrcheck = app.add_subcommand("lrcheck", "Lieb-Robinson commutator and norm bounds");
  binders.push_back({lrcheck, stores[5], {}});
  model_options(binders.back());
  binders.back().integer("--sites", "sites", "chain length");
  binders.back().text("--op", "op", "operator placed at both ends");
  binders.back().int_list("--distances", "distances", "separations, e.g. 2,3,4");
  binders.back().real_list("--times", "times", "times, e.g. 0.1,0.2,0.4");
  binders.back().text_list("--norm-ops", "norm_ops", "operators for the norm bound");
  binders.back().integer("--seed", "seed", "seed for random operators");

  std::string replay_source;
  auto* replay = app.add_subcommand("replay", "rerun from a metadata JSON or CSV header");
  replay->add_option("source", replay_source, "metadata .json or .csv written by a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Json config;
    if (replay->parsed()) {
      config = config_from_file(replay_source);
    } else {
      for (const auto& b : binders)
        if (b.app->parsed()) config = b.config(b.app->get_name());
    }
    return execute(config, out_path, meta_path);
  } catch (const Json::exception& e) {
    std::cerr << "quasix: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "quasix: " << e.what() << "\n";
    return kExitConfig;
  }
}
