#include "quasix/quasix.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "core/experiments.hpp"
#include "core/models.hpp"
#include "core/mps.hpp"

struct quasix_run {
  quasix::experiments::RunOutput output;
  std::vector<std::vector<double>> flat;
  std::vector<std::string> csv;
  std::string preamble;
  std::string metadata;
};

struct quasix_excitation {
  quasix::mps::ExcitationProblem problem;
};

namespace {

thread_local std::string last_error;

quasix_status fail(quasix_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Body>
quasix_status guarded(Body&& body) {
  try {
    last_error.clear();
    body();
    return QUASIX_OK;
  } catch (const quasix::Error& e) {
    switch (e.kind()) {
      case quasix::ErrorKind::InvalidArgument: return fail(QUASIX_ERR_INVALID_ARGUMENT, e.what());
      case quasix::ErrorKind::Numerical: return fail(QUASIX_ERR_NUMERICAL, e.what());
      case quasix::ErrorKind::NotConverged: return fail(QUASIX_ERR_NOT_CONVERGED, e.what());
    }
    return fail(QUASIX_ERR_INTERNAL, e.what());
  } catch (const quasix::experiments::Json::exception& e) {
    return fail(QUASIX_ERR_INVALID_ARGUMENT, std::string("json: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(QUASIX_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QUASIX_ERR_INTERNAL, e.what());
  }
}

bool valid_table(const quasix_run* run, size_t index) {
  return run && index < run->output.tables.size();
}

}  // namespace

extern "C" {

const char* quasix_version(void) { return QUASIX_VERSION; }

const char* quasix_last_error(void) { return last_error.c_str(); }

quasix_status quasix_run_create(const char* config_json, quasix_run** out) {
  if (!config_json || !out) return fail(QUASIX_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto run = std::make_unique<quasix_run>();
    run->output = quasix::experiments::run(quasix::experiments::Json::parse(config_json));
    for (const auto& t : run->output.tables) {
      std::vector<double> flat;
      flat.reserve(t.rows.size() * t.columns.size());
      for (const auto& row : t.rows) flat.insert(flat.end(), row.begin(), row.end());
      run->flat.push_back(std::move(flat));
      run->csv.push_back(quasix::experiments::csv_body(t));
    }
    run->preamble = quasix::experiments::csv_preamble(run->output);
    run->metadata = run->output.meta.dump(2);
    *out = run.release();
  });
}

void quasix_run_free(quasix_run* run) { delete run; }

size_t quasix_run_table_count(const quasix_run* run) { return run ? run->output.tables.size() : 0; }

const char* quasix_run_table_name(const quasix_run* run, size_t index) {
  return valid_table(run, index) ? run->output.tables[index].name.c_str() : nullptr;
}

size_t quasix_run_table_rows(const quasix_run* run, size_t index) {
  return valid_table(run, index) ? run->output.tables[index].rows.size() : 0;
}

size_t quasix_run_table_cols(const quasix_run* run, size_t index) {
  return valid_table(run, index) ? run->output.tables[index].columns.size() : 0;
}

const char* quasix_run_table_column(const quasix_run* run, size_t index, size_t col) {
  if (!valid_table(run, index) || col >= run->output.tables[index].columns.size()) return nullptr;
  return run->output.tables[index].columns[col].c_str();
}

const double* quasix_run_table_data(const quasix_run* run, size_t index) {
  return valid_table(run, index) ? run->flat[index].data() : nullptr;
}

const char* quasix_run_table_csv(const quasix_run* run, size_t index) {
  return valid_table(run, index) ? run->csv[index].c_str() : nullptr;
}

const char* quasix_run_preamble(const quasix_run* run) { return run ? run->preamble.c_str() : nullptr; }

const char* quasix_run_metadata(const quasix_run* run) { return run ? run->metadata.c_str() : nullptr; }

quasix_status quasix_config_normalize(const char* config_json, char** out) {
  if (!config_json || !out) return fail(QUASIX_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const std::string text =
        quasix::experiments::normalize_config(quasix::experiments::Json::parse(config_json)).dump();
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void quasix_string_free(char* text) { delete[] text; }

quasix_status quasix_parse_momentum(const char* text, double* out) {
  if (!text || !out) return fail(QUASIX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = quasix::experiments::parse_momentum(text); });
}

quasix_status quasix_excitation_create_aklt(int ell, quasix_excitation** out) {
  if (!out) return fail(QUASIX_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new quasix_excitation{
        quasix::mps::ExcitationProblem(quasix::mps::aklt_tensor(), quasix::models::aklt_bond_projector(), ell)};
  });
}

void quasix_excitation_free(quasix_excitation* problem) { delete problem; }

size_t quasix_excitation_dim(const quasix_excitation* problem) {
  return problem ? static_cast<size_t>(problem->problem.dim()) : 0;
}

quasix_status quasix_excitation_energies(const quasix_excitation* problem, double p, double rank_tol,
                                         double* energies, size_t capacity, size_t* count) {
  if (!problem || !count || (capacity > 0 && !energies)) return fail(QUASIX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto levels = problem->problem.solve(p, rank_tol);
    *count = static_cast<size_t>(levels.rank);
    for (size_t i = 0; i < capacity && i < *count; ++i) energies[i] = levels.energies(static_cast<Eigen::Index>(i));
  });
}

}  // extern "C"
