#ifndef EVHAN_EVHAN_H
#define EVHAN_EVHAN_H

/* C interface to the evhan library. Every call returns an evhan_status; on
 * failure evhan_last_error() describes the problem for the calling thread.
 * Strings handed out through char** parameters are released with
 * evhan_string_free. */

#include <stddef.h>

#if defined(EVHAN_BUILDING_LIBRARY)
#define EVHAN_API __attribute__((visibility("default")))
#else
#define EVHAN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evhan_status {
  EVHAN_OK = 0,
  EVHAN_USAGE_ERROR = 1,
  EVHAN_DATA_ERROR = 2,
  EVHAN_INTERNAL_ERROR = 3
} evhan_status;

typedef struct evhan_config evhan_config;
typedef struct evhan_model evhan_model;

/* Receives progress lines such as per-epoch logs and warnings. */
typedef void (*evhan_log_fn)(const char* line, void* user);

EVHAN_API const char* evhan_version(void);
EVHAN_API const char* evhan_last_error(void);
EVHAN_API const char* evhan_status_name(evhan_status status);
EVHAN_API void evhan_string_free(char* s);

/* Configuration: flat "table.key" values. Later loads and sets overwrite
 * earlier ones; unknown keys are rejected with EVHAN_USAGE_ERROR. */
EVHAN_API evhan_status evhan_config_new(evhan_config** out);
EVHAN_API void evhan_config_free(evhan_config* config);
EVHAN_API evhan_status evhan_config_load(evhan_config* config, const char* toml_path);
EVHAN_API evhan_status evhan_config_set(evhan_config* config, const char* key, const char* value);
EVHAN_API evhan_status evhan_config_set_logger(evhan_config* config, evhan_log_fn fn, void* user);
/* Resolved configuration as JSON. */
EVHAN_API evhan_status evhan_config_dump(const evhan_config* config, char** out_json);

/* Subcommands. On success *out_report holds the report text. */
EVHAN_API evhan_status evhan_run_extract(const evhan_config* config, char** out_report);
EVHAN_API evhan_status evhan_run_label(const evhan_config* config, char** out_report);
EVHAN_API evhan_status evhan_run_train(const evhan_config* config, char** out_report);
EVHAN_API evhan_status evhan_run_predict(const evhan_config* config, char** out_report);
EVHAN_API evhan_status evhan_run_explain(const evhan_config* config, char** out_report);
EVHAN_API evhan_status evhan_run_backtest(const evhan_config* config, char** out_report);
EVHAN_API evhan_status evhan_run_synth(const evhan_config* config, char** out_report);

/* Checkpoints. */
EVHAN_API evhan_status evhan_model_load(const char* path, evhan_model** out);
EVHAN_API void evhan_model_free(evhan_model* model);
/* Hyperparameters, vocabulary size and parameter count as JSON. */
EVHAN_API evhan_status evhan_model_info(const evhan_model* model, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* EVHAN_EVHAN_H */
