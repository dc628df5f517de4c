#ifndef CDL_CDL_H_
#define CDL_CDL_H_

/* C interface to the collaborative deep learning library. Every object is an
 * opaque handle released by its *_free function (NULL is accepted). Every
 * fallible call returns a cdl_status; on failure cdl_last_error() describes
 * the problem for the calling thread until its next failing call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CDL_API __declspec(dllexport)
#elif defined(__GNUC__)
#define CDL_API __attribute__((visibility("default")))
#else
#define CDL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdl_status {
  CDL_OK = 0,
  CDL_ERR_PARSE = 1,
  CDL_ERR_VALIDATION = 2,
  CDL_ERR_ARGUMENT = 3,
  CDL_ERR_SHAPE = 4,
  CDL_ERR_NUMERIC = 5,
  CDL_ERR_IO = 6,
  CDL_ERR_TRAINING = 7,
  CDL_ERR_INTERNAL = 8
} cdl_status;

typedef struct cdl_ratings cdl_ratings;
typedef struct cdl_content cdl_content;
typedef struct cdl_split cdl_split;
typedef struct cdl_config cdl_config;
typedef struct cdl_model cdl_model;
typedef struct cdl_metrics cdl_metrics;
typedef struct cdl_chain cdl_chain;
typedef struct cdl_manifest cdl_manifest;

CDL_API const char* cdl_last_error(void);
CDL_API const char* cdl_status_string(cdl_status status);
CDL_API const char* cdl_version(void);
/* "error", "warn", "info" or "debug". */
CDL_API cdl_status cdl_set_log_level(const char* level);

/* ---- ratings ---------------------------------------------------------- */

CDL_API cdl_status cdl_ratings_load(const char* path, cdl_ratings** out);
CDL_API cdl_status cdl_ratings_create(size_t num_users, size_t num_items,
                                      const uint32_t* users,
                                      const uint32_t* items, size_t count,
                                      cdl_ratings** out);
CDL_API cdl_status cdl_ratings_save(const cdl_ratings* ratings,
                                    const char* path);
CDL_API size_t cdl_ratings_num_users(const cdl_ratings* ratings);
CDL_API size_t cdl_ratings_num_items(const cdl_ratings* ratings);
CDL_API size_t cdl_ratings_nnz(const cdl_ratings* ratings);
CDL_API int cdl_ratings_contains(const cdl_ratings* ratings, uint32_t user,
                                 uint32_t item);
CDL_API void cdl_ratings_free(cdl_ratings* ratings);

/* ---- content ---------------------------------------------------------- */

/* normalization: "binary" (default when NULL) or "maxnorm". */
CDL_API cdl_status cdl_content_load(const char* path, const char* normalization,
                                    cdl_content** out);
CDL_API cdl_status cdl_content_create(size_t num_items, size_t vocab_size,
                                      const uint32_t* items,
                                      const uint32_t* words,
                                      const double* counts, size_t count,
                                      const char* normalization,
                                      cdl_content** out);
CDL_API cdl_status cdl_content_save(const cdl_content* content,
                                    const char* path);
CDL_API size_t cdl_content_num_items(const cdl_content* content);
CDL_API size_t cdl_content_vocab_size(const cdl_content* content);
CDL_API size_t cdl_content_nnz(const cdl_content* content);
CDL_API void cdl_content_free(cdl_content* content);

/* Writes the top `size` words by tf-idf score to vocab_out and the content
 * restricted to them (renumbered) to content_out. tokens_path may be NULL. */
CDL_API cdl_status cdl_vocab_select(const char* content_path,
                                    const char* tokens_path, size_t size,
                                    const char* vocab_out,
                                    const char* content_out);

/* ---- splits ----------------------------------------------------------- */

CDL_API cdl_status cdl_split_create(const cdl_ratings* ratings,
                                    size_t train_per_user, uint64_t seed,
                                    cdl_split** out);
CDL_API cdl_status cdl_split_read_manifest(const char* path,
                                           const cdl_ratings* ratings,
                                           cdl_split** out);
CDL_API cdl_status cdl_split_write_manifest(const cdl_split* split,
                                            const char* path);
/* Copies of the two halves. */
CDL_API cdl_status cdl_split_train(const cdl_split* split, cdl_ratings** out);
CDL_API cdl_status cdl_split_test(const cdl_split* split, cdl_ratings** out);
CDL_API size_t cdl_split_num_eval_users(const cdl_split* split);
CDL_API void cdl_split_free(cdl_split* split);

/* ---- configuration ---------------------------------------------------- */

CDL_API cdl_status cdl_config_create(cdl_config** out);
CDL_API cdl_status cdl_config_load(const char* path, cdl_config** out);
CDL_API cdl_status cdl_config_parse(const char* text, cdl_config** out);
CDL_API cdl_status cdl_config_set(cdl_config* config, const char* key,
                                  const char* value);
/* Copies the value (NUL-terminated) into buf when it fits; *needed receives
 * the size including the terminator. A missing key is CDL_ERR_ARGUMENT. */
CDL_API cdl_status cdl_config_get(const cdl_config* config, const char* key,
                                  char* buf, size_t capacity, size_t* needed);
CDL_API int cdl_config_contains(const cdl_config* config, const char* key);
CDL_API cdl_status cdl_config_save(const cdl_config* config, const char* path);
/* Parses and validates the hyperparameters without training. */
CDL_API cdl_status cdl_config_validate(const cdl_config* config);
CDL_API void cdl_config_free(cdl_config* config);

/* ---- training and models ---------------------------------------------- */

/* variant: "cdl", "two-step", "encoder-only" or "mf". content may be NULL
 * only for "mf". When report_path is set, one TSV row per sweep is appended
 * as training progresses. */
CDL_API cdl_status cdl_train(const char* variant, const cdl_ratings* ratings,
                             const cdl_content* content,
                             const cdl_config* config, const char* report_path,
                             cdl_model** out);
CDL_API cdl_status cdl_model_save(const cdl_model* model, const char* dir);
CDL_API cdl_status cdl_model_load(const char* dir, cdl_model** out);
CDL_API size_t cdl_model_num_users(const cdl_model* model);
CDL_API size_t cdl_model_num_items(const cdl_model* model);
CDL_API size_t cdl_model_rank(const cdl_model* model);
CDL_API const char* cdl_model_variant(const cdl_model* model);
/* Row-major copies: U is users x rank, V is items x rank. Either may be
 * NULL. */
CDL_API cdl_status cdl_model_factors(const cdl_model* model, double* U,
                                     double* V);
/* The hyperparameters the model was trained with. */
CDL_API cdl_status cdl_model_config(const cdl_model* model, cdl_config** out);
CDL_API void cdl_model_free(cdl_model* model);

/* ---- prediction ------------------------------------------------------- */

CDL_API cdl_status cdl_predict(const cdl_model* model, uint32_t user,
                               uint32_t item, double* score);
/* Best-first top-n items for `user`. Items the user has in `exclude` (may be
 * NULL) are skipped. *count receives min(n, candidates). */
CDL_API cdl_status cdl_recommend(const cdl_model* model,
                                 const cdl_ratings* exclude, uint32_t user,
                                 size_t n, uint32_t* items, double* scores,
                                 size_t* count);
/* Score of an unrated item from its raw word counts: u_i . f_e(x). */
CDL_API cdl_status cdl_predict_new_item(const cdl_model* model, uint32_t user,
                                        const uint32_t* words,
                                        const double* counts, size_t count,
                                        const char* normalization,
                                        double* score);

/* ---- evaluation ------------------------------------------------------- */

/* Ranks every user of `test` (training items excluded) and computes recall
 * at each M of m_grid (NULL for 50..300) and mAP@500. */
CDL_API cdl_status cdl_evaluate(const cdl_model* model,
                                const cdl_ratings* train,
                                const cdl_ratings* test, const size_t* m_grid,
                                size_t m_count, cdl_metrics** out);
/* Appends the repetitions of `other` (same M grid) and re-aggregates. */
CDL_API cdl_status cdl_metrics_merge(cdl_metrics* into,
                                     const cdl_metrics* other);
CDL_API size_t cdl_metrics_grid_size(const cdl_metrics* metrics);
CDL_API size_t cdl_metrics_grid_value(const cdl_metrics* metrics, size_t k);
CDL_API size_t cdl_metrics_repetitions(const cdl_metrics* metrics);
CDL_API double cdl_metrics_recall(const cdl_metrics* metrics, size_t rep,
                                  size_t k);
CDL_API double cdl_metrics_map(const cdl_metrics* metrics, size_t rep);
CDL_API size_t cdl_metrics_users(const cdl_metrics* metrics, size_t rep);
CDL_API double cdl_metrics_recall_mean(const cdl_metrics* metrics, size_t k);
CDL_API double cdl_metrics_recall_std(const cdl_metrics* metrics, size_t k);
CDL_API double cdl_metrics_map_mean(const cdl_metrics* metrics);
CDL_API double cdl_metrics_map_std(const cdl_metrics* metrics);
CDL_API cdl_status cdl_metrics_write_tsv(const cdl_metrics* metrics,
                                         const char* path);
CDL_API void cdl_metrics_free(cdl_metrics* metrics);

/* ---- grid search ------------------------------------------------------ */

/* grid_config may hold comma lists for hyperparameter keys (';' between
 * width lists). Writes grid.tsv and runs.tsv into out_dir when it is set.
 * best (optional) receives the selected configuration. */
CDL_API cdl_status cdl_grid_search(const cdl_config* grid_config,
                                   const char* variant,
                                   const cdl_ratings* ratings,
                                   const cdl_content* content, size_t folds,
                                   size_t select_m, size_t workers,
                                   const char* out_dir, size_t* runs,
                                   cdl_config** best, double* best_mean);

/* ---- sampling --------------------------------------------------------- */

/* Metropolis-within-Gibbs chain. init may be NULL. */
CDL_API cdl_status cdl_sample(const cdl_ratings* ratings,
                              const cdl_content* content,
                              const cdl_config* config, size_t iterations,
                              size_t burn_in, size_t thin, uint64_t seed,
                              const cdl_model* init, cdl_chain** out);
CDL_API size_t cdl_chain_kept(const cdl_chain* chain);
CDL_API size_t cdl_chain_layers(const cdl_chain* chain);
CDL_API double cdl_chain_weight_acceptance(const cdl_chain* chain,
                                           size_t layer);
CDL_API double cdl_chain_hidden_acceptance(const cdl_chain* chain,
                                           size_t layer);
CDL_API size_t cdl_chain_warnings(const cdl_chain* chain);
/* Row-major posterior means; either may be NULL. */
CDL_API cdl_status cdl_chain_means(const cdl_chain* chain, double* U,
                                   double* V);
CDL_API cdl_status cdl_chain_write(const cdl_chain* chain,
                                   const char* chain_tsv,
                                   const char* summary_path);
CDL_API void cdl_chain_free(cdl_chain* chain);

/* ---- synthetic data --------------------------------------------------- */

/* Draws a dataset from the generative model with the config's
 * hyperparameters (lambda_u, lambda_v, lambda_n, lambda_w required). */
CDL_API cdl_status cdl_synthesize(size_t num_users, size_t num_items,
                                  size_t vocab_size, size_t rank,
                                  const cdl_config* config, uint64_t seed,
                                  double input_density, cdl_ratings** ratings,
                                  cdl_content** content);

/* ---- run manifests ---------------------------------------------------- */

/* out receives 64 hex digits and a terminator. */
CDL_API cdl_status cdl_sha256_file(const char* path, char out[65]);
CDL_API cdl_status cdl_manifest_create(const char* command, uint64_t seed,
                                       cdl_manifest** out);
CDL_API cdl_status cdl_manifest_set_config(cdl_manifest* manifest,
                                           const cdl_config* config);
CDL_API cdl_status cdl_manifest_add_input(cdl_manifest* manifest,
                                          const char* path);
CDL_API cdl_status cdl_manifest_add_output(cdl_manifest* manifest,
                                           const char* path);
CDL_API cdl_status cdl_manifest_write(const cdl_manifest* manifest,
                                      const char* path);
CDL_API void cdl_manifest_free(cdl_manifest* manifest);

#ifdef __cplusplus
}
#endif

#endif /* CDL_CDL_H_ */
