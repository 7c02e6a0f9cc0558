#ifndef QUASIX_QUASIX_H
#define QUASIX_QUASIX_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define QUASIX_API __declspec(dllexport)
#else
#define QUASIX_API __attribute__((visibility("default")))
#endif

typedef enum quasix_status {
  QUASIX_OK = 0,
  QUASIX_ERR_INVALID_ARGUMENT = 1,
  QUASIX_ERR_NUMERICAL = 2,
  QUASIX_ERR_NOT_CONVERGED = 3,
  QUASIX_ERR_INTERNAL = 4
} quasix_status;

/* Result of one experiment run: tables plus JSON metadata. */
typedef struct quasix_run quasix_run;

/* Block excitation problem over the exact AKLT ground state. */
typedef struct quasix_excitation quasix_excitation;

QUASIX_API const char* quasix_version(void);

/* Message of the last failed call on this thread ("" if none). */
QUASIX_API const char* quasix_last_error(void);

/* Runs a command described by a JSON object, e.g.
   {"command":"spectrum","model":"tfim","params":"g=2","sites":8}. */
QUASIX_API quasix_status quasix_run_create(const char* config_json, quasix_run** out);
QUASIX_API void quasix_run_free(quasix_run* run);

QUASIX_API size_t quasix_run_table_count(const quasix_run* run);
QUASIX_API const char* quasix_run_table_name(const quasix_run* run, size_t index);
QUASIX_API size_t quasix_run_table_rows(const quasix_run* run, size_t index);
QUASIX_API size_t quasix_run_table_cols(const quasix_run* run, size_t index);
QUASIX_API const char* quasix_run_table_column(const quasix_run* run, size_t index, size_t col);
/* Row-major values; valid until the run is freed. */
QUASIX_API const double* quasix_run_table_data(const quasix_run* run, size_t index);
/* Header line plus rows. */
QUASIX_API const char* quasix_run_table_csv(const quasix_run* run, size_t index);
/* "# ..." lines for CSV files. */
QUASIX_API const char* quasix_run_preamble(const quasix_run* run);
QUASIX_API const char* quasix_run_metadata(const quasix_run* run);

/* Normalized config with defaults filled in, as JSON. Caller frees with quasix_string_free. */
QUASIX_API quasix_status quasix_config_normalize(const char* config_json, char** out);
QUASIX_API void quasix_string_free(char* text);

/* Momentum text such as "0.4pi" or "-pi/2". */
QUASIX_API quasix_status quasix_parse_momentum(const char* text, double* out);

QUASIX_API quasix_status quasix_excitation_create_aklt(int ell, quasix_excitation** out);
QUASIX_API void quasix_excitation_free(quasix_excitation* problem);
QUASIX_API size_t quasix_excitation_dim(const quasix_excitation* problem);
/* Writes up to `capacity` lowest energies at momentum p; *count receives the
   number of retained levels (the rank of the norm matrix). */
QUASIX_API quasix_status quasix_excitation_energies(const quasix_excitation* problem, double p, double rank_tol,
                                                    double* energies, size_t capacity, size_t* count);

#ifdef __cplusplus
}
#endif

#endif
