/*
 * C interface to the multi-task boosting library.
 *
 * Every function returning rmtgb_status leaves a message for the calling
 * thread in rmtgb_last_error() when the status is not RMTGB_OK. Handles are
 * opaque and owned by the caller; release them with the matching *_free.
 */
#ifndef RMTGB_C_H
#define RMTGB_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RMTGB_API __declspec(dllexport)
#else
#define RMTGB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rmtgb_status {
    RMTGB_OK = 0,
    RMTGB_ERR_INVALID_ARGUMENT = 1,
    RMTGB_ERR_IO = 2,
    RMTGB_ERR_PARSE = 3,
    RMTGB_ERR_GENERATION = 4,
    RMTGB_ERR_INTERNAL = 5
} rmtgb_status;

typedef struct rmtgb_dataset rmtgb_dataset;
typedef struct rmtgb_batch rmtgb_batch;
typedef struct rmtgb_model rmtgb_model;

/* Receives one key=value log line (no trailing newline). */
typedef void (*rmtgb_log_fn)(const char* line, void* user);

RMTGB_API const char* rmtgb_version(void);
RMTGB_API const char* rmtgb_last_error(void);
RMTGB_API void rmtgb_string_free(char* s);

/* ---- datasets ---- */

/* Row-major features (n x d); targets are class indices when num_classes >= 2. */
RMTGB_API rmtgb_status rmtgb_dataset_create(const double* features, const double* targets,
                                            const int* task_of, size_t n, size_t d, int num_tasks,
                                            int num_classes, rmtgb_dataset** out);
RMTGB_API rmtgb_status rmtgb_dataset_read_csv(const char* path, int classification,
                                              rmtgb_dataset** out);
RMTGB_API rmtgb_status rmtgb_dataset_write_csv(const rmtgb_dataset* data, const char* path);
RMTGB_API rmtgb_status rmtgb_dataset_shape(const rmtgb_dataset* data, size_t* n, size_t* d,
                                           int* num_tasks, int* num_classes);
RMTGB_API void rmtgb_dataset_free(rmtgb_dataset* data);

/* ---- synthetic batches ---- */

/* config_json: SynthConfig fields overriding the preset ("paper-synth-reg" or
 * "paper-synth-clf"); NULL or "{}" keeps the preset. */
RMTGB_API rmtgb_status rmtgb_synth_generate(const char* preset, const char* config_json,
                                            uint64_t seed, rmtgb_batch** out);
RMTGB_API rmtgb_status rmtgb_batch_train(const rmtgb_batch* batch, rmtgb_dataset** out);
RMTGB_API rmtgb_status rmtgb_batch_test(const rmtgb_batch* batch, rmtgb_dataset** out);
RMTGB_API rmtgb_status rmtgb_batch_outliers(const rmtgb_batch* batch, int* ids, size_t capacity,
                                            size_t* count);
/* Writes train.csv, test.csv and manifest.json into dir. */
RMTGB_API rmtgb_status rmtgb_batch_write(const rmtgb_batch* batch, const char* dir);
RMTGB_API void rmtgb_batch_free(rmtgb_batch* batch);

/* ---- models ---- */

/* family: rmtgb | mtgb | st-gb | dp-gb | taf-gb.
 * params_json keys: m1, m2, m3, shrinkage, seed, theta_init_mean,
 * theta_init_std, theta_learning_rate. The loss follows the dataset. */
RMTGB_API rmtgb_status rmtgb_model_train(const char* family, const char* params_json,
                                         const rmtgb_dataset* train, rmtgb_log_fn log, void* user,
                                         rmtgb_model** out);
RMTGB_API rmtgb_status rmtgb_model_num_outputs(const rmtgb_model* model, size_t* k);
/* out_scores: n x K raw scores. */
RMTGB_API rmtgb_status rmtgb_model_predict_scores(const rmtgb_model* model, const double* features,
                                                  const int* task_of, size_t n, size_t d,
                                                  double* out_scores);
/* out_values: regression prediction or argmax class index per row. */
RMTGB_API rmtgb_status rmtgb_model_predict(const rmtgb_model* model, const double* features,
                                           const int* task_of, size_t n, size_t d,
                                           double* out_values);
RMTGB_API rmtgb_status rmtgb_model_predict_dataset(const rmtgb_model* model,
                                                   const rmtgb_dataset* data, double* out_values);
/* metric: accuracy | macro_recall | rmse | mae */
RMTGB_API rmtgb_status rmtgb_model_evaluate(const rmtgb_model* model, const rmtgb_dataset* data,
                                            const char* metric, double* out);
/* sigmoid(theta) per task; count is 0 for models without gates. */
RMTGB_API rmtgb_status rmtgb_model_gates(const rmtgb_model* model, double* out, size_t capacity,
                                         size_t* count);
RMTGB_API rmtgb_status rmtgb_model_to_json(const rmtgb_model* model, char** out_json);
RMTGB_API rmtgb_status rmtgb_model_from_json(const char* json, rmtgb_model** out);
RMTGB_API rmtgb_status rmtgb_model_save(const rmtgb_model* model, const char* path);
RMTGB_API rmtgb_status rmtgb_model_load(const char* path, rmtgb_model** out);
RMTGB_API void rmtgb_model_free(rmtgb_model* model);

/* ---- experiments ---- */

/* experiment_json keys: preset, synth, csv, classification, models, grids,
 * batches, seed, jobs, folds, train_ratio, shrinkage, theta_*. */
RMTGB_API rmtgb_status rmtgb_benchmark_run(const char* experiment_json, const char* out_dir,
                                           rmtgb_log_fn log, void* user);
/* Nemenyi critical distance at alpha = 0.05 for k models over n scenarios. */
RMTGB_API rmtgb_status rmtgb_critical_distance(int num_models, int num_scenarios, double* out);

#ifdef __cplusplus
}
#endif

#endif /* RMTGB_C_H */
