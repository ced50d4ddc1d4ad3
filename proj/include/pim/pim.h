/* C interface to the path representation library. Every function returns a
 * pim_status; on failure pim_last_error() describes the problem for the
 * calling thread. Handles are opaque and released with their _free call. */
#ifndef PIM_PIM_H
#define PIM_PIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PIM_API __declspec(dllexport)
#else
#define PIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pim_status {
  PIM_OK = 0,
  PIM_ERR_INVALID_ARGUMENT = 1,
  PIM_ERR_IO = 2,
  PIM_ERR_PARSE = 3,
  PIM_ERR_MISSING_EDGE = 4,
  PIM_ERR_REPEATED_NODE = 5,
  PIM_ERR_TOO_SHORT = 6,
  PIM_ERR_NO_PATH = 7,
  PIM_ERR_EMPTY_PARTITION = 8,
  PIM_ERR_SHAPE_MISMATCH = 9,
  PIM_ERR_NUMERIC = 10,
  PIM_ERR_SINGULAR = 11,
  PIM_ERR_INTERNAL = 12
} pim_status;

/* Message and detail (line number, hop index, ...) of the last failure on
 * this thread. The string stays valid until the next failing call. */
PIM_API const char* pim_last_error(void);
PIM_API int64_t pim_last_error_detail(void);
PIM_API const char* pim_status_name(pim_status s);
PIM_API const char* pim_version(void);

/* Caps internal worker threads; 0 restores the default. */
PIM_API void pim_set_max_threads(int n);

typedef struct pim_graph pim_graph;
typedef struct pim_features pim_features;
typedef struct pim_paths pim_paths;
typedef struct pim_negatives pim_negatives;
typedef struct pim_model pim_model;
typedef struct pim_matrix pim_matrix;
typedef struct pim_supervised pim_supervised;

/* ---- graph ---- */
PIM_API pim_status pim_graph_load(const char* path, pim_graph** out);
PIM_API pim_status pim_graph_save(const pim_graph* g, const char* path);
PIM_API size_t pim_graph_num_nodes(const pim_graph* g);
PIM_API size_t pim_graph_num_edges(const pim_graph* g);
PIM_API void pim_graph_free(pim_graph* g);

/* ---- paths ---- */
PIM_API pim_status pim_paths_load(const pim_graph* g, const char* path, pim_paths** out);
PIM_API pim_status pim_paths_save(const pim_graph* g, const pim_paths* p, const char* path);
/* Validates one path given in original node ids. */
PIM_API pim_status pim_path_validate(const pim_graph* g, const int64_t* ids, size_t n);
PIM_API size_t pim_paths_count(const pim_paths* p);
PIM_API void pim_paths_free(pim_paths* p);

/* ---- synthetic data ---- */
typedef struct pim_synth_config {
  int grid_width;
  int grid_height;
  int geometric; /* nonzero: random-geometric graph instead of a grid */
  int geometric_nodes;
  double geometric_radius;
  double base_length;
  double length_noise;
  double base_speed;
  double arterial_factor;
  double speed_noise;
  int num_paths;
  int min_hops;
  double detour_factor;
  int max_variants;
  double label_noise;
  double temperature;
  uint64_t seed;
} pim_synth_config;

PIM_API void pim_synth_config_default(pim_synth_config* cfg);
/* Writes graph.csv, paths.csv, travel_times.csv and rank_scores.csv into
 * out_dir (created if needed). */
PIM_API pim_status pim_synth_write(const pim_synth_config* cfg, const char* out_dir);

/* ---- node features ---- */
typedef struct pim_feature_config {
  int walks_per_node;
  int walk_length;
  double return_bias;
  double inout_bias;
  int dim;
  int window;
  int negatives;
  int epochs;
  double learning_rate;
  uint64_t seed;
} pim_feature_config;

PIM_API void pim_feature_config_default(pim_feature_config* cfg);
PIM_API pim_status pim_features_train(const pim_graph* g, const pim_feature_config* cfg, pim_features** out);
PIM_API pim_status pim_features_load(const char* path, pim_features** out);
PIM_API pim_status pim_features_save(const pim_features* f, const char* path);
PIM_API size_t pim_features_dim(const pim_features* f);
PIM_API void pim_features_free(pim_features* f);

/* ---- negative sampling ---- */
typedef enum pim_strategy { PIM_STRATEGY_CURRICULUM = 0, PIM_STRATEGY_RANDOM = 1, PIM_STRATEGY_TOPK = 2 } pim_strategy;

typedef struct pim_negative_config {
  int num_negatives;
  int num_random;
  double tau_low;
  double tau_high;
  size_t max_candidates;
  pim_strategy strategy;
  uint64_t seed;
} pim_negative_config;

PIM_API void pim_negative_config_default(pim_negative_config* cfg);
PIM_API pim_status pim_negatives_sample(const pim_graph* g, const pim_paths* corpus, const pim_negative_config* cfg,
                                        pim_negatives** out);
PIM_API pim_status pim_negatives_load(const pim_graph* g, const char* path, pim_negatives** out);
PIM_API pim_status pim_negatives_save(const pim_graph* g, const pim_negatives* n, const char* path);
PIM_API size_t pim_negatives_count(const pim_negatives* n);
/* Number of sets whose diversified negatives had to be backfilled. */
PIM_API size_t pim_negatives_backfilled(const pim_negatives* n);
PIM_API void pim_negatives_free(pim_negatives* n);

/* ---- training ---- */
typedef enum pim_mi_mode { PIM_MI_JOINT = 0, PIM_MI_GLOBAL = 1, PIM_MI_LOCAL = 2 } pim_mi_mode;
typedef enum pim_curriculum { PIM_CURRICULUM_STAGED = 0, PIM_CURRICULUM_ALL = 1 } pim_curriculum;

typedef struct pim_train_config {
  int epochs;
  int batch_size;
  double learning_rate;
  double beta1;
  double beta2;
  double adam_eps;
  int hidden_dim;
  int output_dim;
  int num_negatives;
  pim_curriculum curriculum;
  pim_mi_mode mi_mode;
  uint64_t seed;
  const char* checkpoint_dir; /* NULL: no per-epoch checkpoints */
  const char* loss_trace_path; /* NULL: no CSV trace */
} pim_train_config;

PIM_API void pim_train_config_default(pim_train_config* cfg);
PIM_API pim_status pim_train(const pim_train_config* cfg, const pim_graph* g, const pim_features* f,
                             const pim_paths* corpus, const pim_negatives* negatives, pim_model** out);
PIM_API pim_status pim_model_save(const pim_model* m, const char* dir);
PIM_API pim_status pim_model_load(const char* dir, pim_model** out);
PIM_API int pim_model_epoch(const pim_model* m);
/* Path-path discriminator accuracy on positive pairs and random negatives. */
PIM_API pim_status pim_model_pair_accuracy(const pim_model* m, const pim_graph* g, const pim_features* f,
                                           const pim_paths* paths, const pim_negatives* negatives, double* out);
PIM_API void pim_model_free(pim_model* m);

/* ---- matrices (embeddings) ---- */
PIM_API pim_status pim_embed(const pim_model* m, const pim_graph* g, const pim_features* f, const pim_paths* paths,
                             pim_matrix** out);
/* Mean of node features along each path. */
PIM_API pim_status pim_embed_mean_features(const pim_graph* g, const pim_features* f, const pim_paths* paths,
                                           pim_matrix** out);
PIM_API pim_status pim_matrix_load(const char* path, pim_matrix** out);
PIM_API pim_status pim_matrix_save(const pim_matrix* m, const char* path);
PIM_API size_t pim_matrix_rows(const pim_matrix* m);
PIM_API size_t pim_matrix_cols(const pim_matrix* m);
/* Row-major view, valid for the lifetime of the handle. */
PIM_API const double* pim_matrix_data(const pim_matrix* m);
PIM_API void pim_matrix_free(pim_matrix* m);

/* ---- downstream evaluation ---- */
typedef struct pim_regression_metrics {
  double mae;
  double mare;
  double mape;
  size_t mape_excluded;
} pim_regression_metrics;

typedef struct pim_rank_metrics {
  double kendall_tau;
  double spearman_rho;
  size_t groups_used;
  size_t groups_skipped;
} pim_rank_metrics;

typedef enum pim_regressor { PIM_REGRESSOR_RIDGE = 0, PIM_REGRESSOR_GP = 1 } pim_regressor;

PIM_API pim_status pim_regression_metrics_compute(const double* pred, const double* truth, size_t n,
                                                  pim_regression_metrics* out);
PIM_API pim_status pim_rank_metrics_compute(const double* pred, const double* truth, const int64_t* groups, size_t n,
                                            pim_rank_metrics* out);

/* Compares two label files of the same kind (travel_times or rank_scores
 * layout, detected from the column count) matched by path id. */
PIM_API pim_status pim_eval_label_files(const char* pred_path, const char* truth_path,
                                        pim_regression_metrics* regression, pim_rank_metrics* rank, int* has_rank);

/* Fits a regressor on the training split of (embeddings, labels) and writes
 * predictions for every labeled path to pred_path (may be NULL) in the
 * labels' layout. Metrics are computed on the held-out (validation + test)
 * rows; rank metrics only for ranking labels (*has_rank set to 1). */
PIM_API pim_status pim_regress_labels(const pim_matrix* embeddings, const char* labels_path, pim_regressor kind,
                                      double ridge_lambda, uint64_t split_seed, const char* pred_path,
                                      pim_regression_metrics* heldout, pim_rank_metrics* heldout_rank,
                                      int* has_rank);

/* ---- fine-tuning ---- */
typedef struct pim_finetune_config {
  int epochs;
  int batch_size;
  double learning_rate;
  int freeze_encoder;
  uint64_t seed;
  int hidden_dim; /* used for cold starts only */
  int output_dim;
} pim_finetune_config;

PIM_API void pim_finetune_config_default(pim_finetune_config* cfg);
/* model == NULL starts from a freshly initialized encoder. Targets come from
 * a travel-time label file; only the training split is used. */
PIM_API pim_status pim_finetune(const pim_model* model, const pim_graph* g, const pim_features* f,
                                const pim_paths* paths, const char* labels_path, uint64_t split_seed,
                                double label_fraction, const pim_finetune_config* cfg, pim_supervised** out,
                                pim_regression_metrics* heldout);
PIM_API pim_status pim_supervised_save(const pim_supervised* s, const char* dir);
PIM_API pim_status pim_supervised_load(const char* dir, pim_supervised** out);
/* n must equal the path count, otherwise PIM_ERR_SHAPE_MISMATCH. */
PIM_API pim_status pim_supervised_predict(const pim_supervised* s, const pim_graph* g, const pim_features* f,
                                          const pim_paths* paths, double* out, size_t n);
PIM_API void pim_supervised_free(pim_supervised* s);

/* ---- ablation ---- */
typedef enum pim_axis { PIM_AXIS_MI_MODE = 0, PIM_AXIS_STRATEGY = 1, PIM_AXIS_NEGATIVES = 2, PIM_AXIS_BASELINE = 3 } pim_axis;

typedef struct pim_ablation_config {
  pim_synth_config synth;
  pim_feature_config features;
  pim_negative_config negatives;
  pim_train_config train;
  pim_regressor regressor;
  double ridge_lambda;
  uint64_t split_seed;
  const uint64_t* seeds;
  size_t num_seeds;
} pim_ablation_config;

/* Desk-scale standard setup (8x8 grid, 200 paths, seed 7) and seeds 1..3. */
PIM_API void pim_ablation_config_default(pim_ablation_config* cfg);
/* Runs one axis on the synthetic corpus and writes a CSV table of held-out
 * travel-time MAE per variant and seed. */
PIM_API pim_status pim_ablate(const pim_ablation_config* cfg, pim_axis axis, const char* table_path);

#ifdef __cplusplus
}
#endif

#endif /* PIM_PIM_H */
