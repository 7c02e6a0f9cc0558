#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "core/common.hpp"

namespace quasix::experiments {

using Json = nlohmann::ordered_json;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunOutput {
  std::vector<Table> tables;  ///< tables[0] is the primary output
  Json meta;                  ///< constants, diagnostics, normalized config
};

/// Fills defaults and rejects unknown keys or invalid values. The result is
/// what gets recorded in the metadata and what reproduces the run.
Json normalize_config(const Json& config);

/// Runs one command described by a (normalized or raw) config object.
/// Commands: spectrum, filter, dispersion, converge, spectralfn, lrcheck.
RunOutput run(const Json& config);

/// Parses "pi", "0.4pi", "-pi/2", "2pi/3" or a plain number.
double parse_momentum(const std::string& text);

/// Nearest point 2 pi k / N, k in [0, N).
int nearest_momentum_index(double p, int sites);

/// CSV body (header line plus rows); values printed with 17 significant digits.
/// Throws Numerical on NaN or Inf.
std::string csv_body(const Table& table);

/// "# key: value" lines describing the run, without timing information.
std::string csv_preamble(const RunOutput& out);

}  // namespace quasix::experiments
