#ifndef PEAKGEN_H
#define PEAKGEN_H

/* C interface to the peakgen core: spectrum simulation, the conditional
 * generator, the two-stream detector, the NDJSON datastore and the pipeline
 * commands that tie them together.
 *
 * Conventions:
 *  - Every fallible function returns a peakgen_status; PEAKGEN_OK is 0.
 *  - On failure, peakgen_last_error() returns a thread-local message that
 *    stays valid until the next failing call on the same thread.
 *  - Strings returned through char** out-parameters are heap-allocated and
 *    must be released with peakgen_string_free().
 *  - Structured data crosses the boundary as JSON text. A pipeline config is
 *    a JSON object (pass NULL or "" for built-in defaults); spectra, records,
 *    filters and detection results use the schemas described next to each
 *    function.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum peakgen_status {
  PEAKGEN_OK = 0,
  PEAKGEN_ERR_CONTRACT = 1, /* broken precondition / invalid argument */
  PEAKGEN_ERR_CONFIG = 2,   /* malformed or out-of-range configuration */
  PEAKGEN_ERR_DATA = 3,     /* malformed records or inconsistent datasets */
  PEAKGEN_ERR_IO = 4,       /* file system failures */
  PEAKGEN_ERR_METRIC = 5,   /* metric undefined for the given input */
  PEAKGEN_ERR_UNKNOWN = 6
} peakgen_status;

const char* peakgen_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* peakgen_last_error(void);

void peakgen_string_free(char* s);

/* ---- pipeline commands ----------------------------------------------------
 * Each command reads/writes the datastore at db_path and places artifacts,
 * a resolved-config snapshot and a manifest entry under out_dir. On success
 * *summary_json (when non-NULL) receives a short JSON run summary.
 */
peakgen_status peakgen_run_simulate(const char* config_json,
                                    const char* db_path, const char* out_dir,
                                    char** summary_json);
peakgen_status peakgen_run_eda(const char* config_json, const char* db_path,
                               const char* out_dir, char** summary_json);
peakgen_status peakgen_run_train_gan(const char* config_json,
                                     const char* db_path, const char* out_dir,
                                     char** summary_json);
/* condition: display name such as "2-CEES + EtOH", or NULL/"" for all
 * default conditions; n <= 0 means the configured per-condition count. */
peakgen_status peakgen_run_generate(const char* config_json,
                                    const char* db_path, const char* out_dir,
                                    const char* condition, int n,
                                    char** summary_json);
peakgen_status peakgen_run_train_detector(const char* config_json,
                                          const char* db_path,
                                          const char* out_dir, int ladder,
                                          char** summary_json);
peakgen_status peakgen_run_evaluate(const char* config_json,
                                    const char* db_path, const char* out_dir,
                                    char** summary_json);
peakgen_status peakgen_run_export_mesh(const char* config_json,
                                       const char* db_path,
                                       const char* out_dir, long long record_id,
                                       char** summary_json);

/* ---- datastore ------------------------------------------------------------
 * Record JSON: {"id": int, "data_type": "real"|"synthetic", "condition": str,
 * "solvent": str, "solute": "A,B", "date": "YYYY-MM-DDTHH:MM:SS",
 * "file_name": str}. file_name is resolved against the database directory
 * and must exist at insert time; id and an empty date are filled in.
 */
typedef struct peakgen_store peakgen_store_t;

peakgen_status peakgen_store_open(const char* path, peakgen_store_t** out);
void peakgen_store_close(peakgen_store_t* store);
peakgen_status peakgen_store_insert(peakgen_store_t* store,
                                    const char* record_json, long long* id_out);
/* Filter JSON: any subset of {"data_type","condition","solvent","solute",
 * "date_from","date_to"}; all given predicates must match (dates inclusive).
 * Pass NULL/"" or "{}" for everything. Results are a JSON array sorted by id.
 */
peakgen_status peakgen_store_query(peakgen_store_t* store,
                                   const char* filter_json,
                                   char** records_json);
peakgen_status peakgen_store_get(peakgen_store_t* store, long long id,
                                 char** record_json);
peakgen_status peakgen_store_count(peakgen_store_t* store, long long* out);

/* ---- trained models -------------------------------------------------------
 * Both open calls take the same pipeline config JSON as the commands (NULL
 * for defaults) plus a checkpoint produced by train-gan / train-detector.
 */
typedef struct peakgen_gan peakgen_gan_t;

peakgen_status peakgen_gan_open(const char* config_json,
                                const char* checkpoint_path,
                                peakgen_gan_t** out);
void peakgen_gan_close(peakgen_gan_t* gan);
/* Condition JSON: {"solvent": str, "solutes": [str, ...],
 * "interference": str (optional)}. Returns a JSON array of n generated
 * intensity arrays. */
peakgen_status peakgen_gan_generate(peakgen_gan_t* gan,
                                    const char* condition_json, int n,
                                    unsigned long long seed,
                                    char** spectra_json);

typedef struct peakgen_detector peakgen_detector_t;

peakgen_status peakgen_detector_open(const char* config_json,
                                     const char* checkpoint_path,
                                     peakgen_detector_t** out);
void peakgen_detector_close(peakgen_detector_t* det);
/* spectrum_json follows the stored-spectrum schema ({"tic": [...], "scans":
 * [{"t": int, "mz": [...]}], ...}). Result JSON: {"solute_names": [...],
 * "posteriors": [...], "decided": [0/1 ...], "peak_presence": [...]}. */
peakgen_status peakgen_detector_detect(peakgen_detector_t* det,
                                       const char* spectrum_json,
                                       char** result_json);

/* ---- metric helpers ------------------------------------------------------ */
peakgen_status peakgen_cosine_similarity(const double* a, const double* b,
                                         size_t n, double* out);
peakgen_status peakgen_pearson(const double* a, const double* b, size_t n,
                               double* out);
/* Peaks with prominence >= min_prominence * max(x), at least min_distance
 * indices apart. */
peakgen_status peakgen_peak_count(const double* x, size_t n,
                                  double min_prominence, int min_distance,
                                  int* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PEAKGEN_H */
