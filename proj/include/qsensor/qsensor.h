/* C API for the qsensor library: a driven two-qubit noise sensor simulator
 * with a shallow neural classifier. All entry points are thread-compatible;
 * each handle must be used from one thread at a time. Functions return
 * QS_OK (0) on success; on failure qs_last_error() describes the problem for
 * the calling thread. */

#ifndef QSENSOR_H
#define QSENSOR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define QSENSOR_API __declspec(dllexport)
#else
#define QSENSOR_API __attribute__((visibility("default")))
#endif

typedef enum qs_status {
    QS_OK = 0,
    QS_ERR_INVALID_ARGUMENT = 1,
    QS_ERR_IO = 2,
    QS_ERR_PARSE = 3,
    QS_ERR_NUMERIC = 4,
    QS_ERR_INTERNAL = 5
} qs_status;

/* Drive conditions, in feature order. */
typedef enum qs_drive {
    QS_DRIVE_EQUAL = 0,
    QS_DRIVE_PUMP_DOUBLE = 1,
    QS_DRIVE_STOKES_DOUBLE = 2
} qs_drive;

QSENSOR_API const char* qs_version(void);

/* Message for the last failure on the calling thread; never NULL. */
QSENSOR_API const char* qs_last_error(void);

/* ---- configuration ----------------------------------------------------- */

typedef struct qs_config qs_config;

/* Fresh configuration with the production defaults. */
QSENSOR_API qs_config* qs_config_create(void);
QSENSOR_API void qs_config_destroy(qs_config* cfg);

/* Merge a key = value file into cfg. */
QSENSOR_API qs_status qs_config_load(qs_config* cfg, const char* path);
QSENSOR_API qs_status qs_config_set(qs_config* cfg, const char* key, const char* value);
/* Copies the printable value of key into buf (NUL-terminated). */
QSENSOR_API qs_status qs_config_get(const qs_config* cfg, const char* key, char* buf,
                                    size_t buf_len);
/* "full" or "fast". */
QSENSOR_API qs_status qs_config_apply_profile(qs_config* cfg, const char* profile);

/* ---- simulation -------------------------------------------------------- */

/* One protocol run with fixed level shifts (delta1, delta2). Writes the
 * population trajectory to trajectory_path when non-NULL and stores the final
 * |ee> population in *final_xi. */
QSENSOR_API qs_status qs_simulate(const qs_config* cfg, double delta1, double delta2,
                                  qs_drive drive, const char* trajectory_path,
                                  double* final_xi);

/* Efficiency map over the configured grid, one file per call. */
QSENSOR_API qs_status qs_efficiency_map(const qs_config* cfg, qs_drive drive,
                                        const char* out_path);

/* ---- dataset and training ---------------------------------------------- */

/* Generates samples_per_class draws for all six classes and writes the
 * dataset file. n_samples/n_failures may be NULL. */
QSENSOR_API qs_status qs_generate_dataset(const qs_config* cfg, const char* out_path,
                                          int32_t* n_samples, int32_t* n_failures);

/* FNV-1a fingerprint of a dataset file's records (reproducibility check). */
QSENSOR_API qs_status qs_dataset_fingerprint(const char* dataset_path, uint64_t* fingerprint);

typedef struct qs_train_summary {
    int32_t epochs;
    double final_train_loss;
    double final_val_loss;
    double final_train_accuracy;
    double final_val_accuracy;
} qs_train_summary;

/* Splits the dataset 3:1:1 (stratified, seeded from cfg), trains the
 * configured network and writes the checkpoint; optionally writes per-epoch
 * history to history_path. */
QSENSOR_API qs_status qs_train(const qs_config* cfg, const char* dataset_path,
                               const char* checkpoint_path, const char* history_path,
                               qs_train_summary* summary);

typedef struct qs_eval_report {
    int32_t n_samples;
    double accuracy;
    double markov_binary_accuracy;
    double nm_within_accuracy;
    double m_within_accuracy;
    int32_t confusion_counts[36];  /* row-major, rows = true class */
    double confusion_row_pct[36];  /* row-normalized percentages */
    double per_class_recall[6];
} qs_eval_report;

/* split: "train", "validation", "test" (using the seeded 3:1:1 split) or "all". */
QSENSOR_API qs_status qs_evaluate(const qs_config* cfg, const char* checkpoint_path,
                                  const char* dataset_path, const char* split,
                                  qs_eval_report* report);

/* Applies the checkpoint's stored standardization, then the network. */
QSENSOR_API qs_status qs_predict(const char* checkpoint_path, const double features[3],
                                 int32_t* label, double probabilities[6]);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QSENSOR_H */
