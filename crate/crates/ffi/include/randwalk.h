#ifndef RANDWALK_H
#define RANDWALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RwStatus {
  RW_STATUS_OK = 0,
  RW_STATUS_PARAMETER = 1,
  RW_STATUS_PRECONDITION = 2,
  RW_STATUS_DATA = 3,
  RW_STATUS_STATE = 4,
  RW_STATUS_UNDEFINED = 5,
  RW_STATUS_DEGENERATE = 6,
  RW_STATUS_SINGULAR = 7,
  RW_STATUS_NUMERIC = 8,
  RW_STATUS_DIVERGENCE = 9,
  RW_STATUS_IO = 10,
  RW_STATUS_NULL_POINTER = 11,
  RW_STATUS_INVALID_UTF8 = 12,
  RW_STATUS_PANIC = 13,
} RwStatus;

typedef enum RwObjective {
  RW_OBJECTIVE_SN = 0,
  RW_OBJECTIVE_PMI = 1,
} RwObjective;

typedef enum RwSolver {
  RW_SOLVER_PLAIN = 0,
  // Relation directions from `k` clusters of the question batch.
  RW_SOLVER_RD = 1,
  // Relation direction from `k` neighbour pairs of each question.
  RW_SOLVER_RD_NN = 2,
} RwSolver;

typedef struct RwAnalogy RwAnalogy;

typedef struct RwCorpus RwCorpus;

typedef struct RwEnsemble RwEnsemble;

typedef struct RwTable RwTable;

// Discourse random-walk settings for `rw_corpus_generate`.
typedef struct RwWalkConfig {
  // Max step length ε₂ (scaled by 1/√d internally).
  double step_bound;
  size_t length;
  double jump_probability;
  uint64_t seed;
} RwWalkConfig;

// Trainer settings; `shard_cells = 0` selects full-batch AdaGrad.
typedef struct RwTrainConfig {
  enum RwObjective objective;
  size_t dim;
  double x_max;
  double learning_rate;
  size_t iterations;
  uint64_t seed;
  size_t shard_cells;
} RwTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *rw_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next `rw_*` call on the same thread.
const char *rw_last_error(void);

// Samples `n` word vectors of dimension `d` from the prior
// `v = s·v̂`, `s ~ U[0, scale_fraction·κ]`.
//
// # Safety
// `out` must be valid for writes.
enum RwStatus rw_ensemble_sample(size_t n,
                                 size_t d,
                                 double kappa,
                                 double scale_fraction,
                                 uint64_t seed,
                                 struct RwEnsemble **out);

// Copies `n·d` row-major values into a new ensemble.
//
// # Safety
// `data` must point to `n·d` readable doubles; `out` must be valid for writes.
enum RwStatus rw_ensemble_from_rows(size_t n,
                                    size_t d,
                                    const double *data,
                                    struct RwEnsemble **out);

// Reads a vectors file. `constant`, if non-NULL, receives the `C` trailer
// or NaN when the file has none.
//
// # Safety
// `file` must be a NUL-terminated string; `out` valid for writes; `constant`
// NULL or valid for writes.
enum RwStatus rw_ensemble_load(const char *file, struct RwEnsemble **out, double *constant);

// Writes a vectors file atomically; a finite `constant` adds a `C` trailer.
//
// # Safety
// `ens` must be a live handle; `file` a NUL-terminated string.
enum RwStatus rw_ensemble_save(const struct RwEnsemble *ens, const char *file, double constant);

// Number of words; 0 for NULL.
//
// # Safety
// `ens` must be NULL or a live handle.
size_t rw_ensemble_len(const struct RwEnsemble *ens);

// Dimension; 0 for NULL.
//
// # Safety
// `ens` must be NULL or a live handle.
size_t rw_ensemble_dim(const struct RwEnsemble *ens);

// Copies word `w`'s vector into `buf` (`buf_len` must be ≥ dim).
//
// # Safety
// `ens` must be a live handle; `buf` writable for `buf_len` doubles.
enum RwStatus rw_ensemble_vector(const struct RwEnsemble *ens,
                                 size_t w,
                                 double *buf,
                                 size_t buf_len);

// # Safety
// `ens` must be NULL or a handle not yet freed.
void rw_ensemble_free(struct RwEnsemble *ens);

// Defaults: ε₂ = 0.05, no jumps.
struct RwWalkConfig rw_walk_config_default(size_t length, uint64_t seed);

// Emits a corpus from the discourse random walk over `ens`.
//
// # Safety
// `ens` and `config` must be valid; `out` valid for writes.
enum RwStatus rw_corpus_generate(const struct RwEnsemble *ens,
                                 const struct RwWalkConfig *config,
                                 struct RwCorpus **out);

// Wraps `len` token ids, each below `vocab_size`.
//
// # Safety
// `tokens` must point to `len` readable values; `out` valid for writes.
enum RwStatus rw_corpus_from_tokens(size_t vocab_size,
                                    const uint32_t *tokens,
                                    size_t len,
                                    struct RwCorpus **out);

// # Safety
// `corpus` must be NULL or a live handle.
size_t rw_corpus_len(const struct RwCorpus *corpus);

// Copies up to `buf_len` tokens; `written` receives the number copied.
//
// # Safety
// `corpus` must be live; `buf` writable for `buf_len` values; `written`
// valid for writes.
enum RwStatus rw_corpus_tokens(const struct RwCorpus *corpus,
                               uint32_t *buf,
                               size_t buf_len,
                               size_t *written);

// # Safety
// `corpus` must be NULL or a handle not yet freed.
void rw_corpus_free(struct RwCorpus *corpus);

// Counts unordered co-occurrences within windows of `q` tokens.
//
// # Safety
// `corpus` must be live; `out` valid for writes.
enum RwStatus rw_table_count(const struct RwCorpus *corpus, size_t q, struct RwTable **out);

// # Safety
// Both paths must be NUL-terminated strings; `out` valid for writes.
enum RwStatus rw_table_load(const char *cooccur_file,
                            const char *word_counts_file,
                            struct RwTable **out);

// # Safety
// `table` must be live; both paths NUL-terminated strings.
enum RwStatus rw_table_save(const struct RwTable *table,
                            const char *cooccur_file,
                            const char *word_counts_file);

// Number of nonzero cells; 0 for NULL.
//
// # Safety
// `table` must be NULL or a live handle.
size_t rw_table_cells(const struct RwTable *table);

// Co-occurrence count of the unordered pair `{i, j}`.
//
// # Safety
// `table` must be live; `out` valid for writes.
enum RwStatus rw_table_count_of(const struct RwTable *table, size_t i, size_t j, double *out);

// PMI of `{i, j}` with additive `smoothing`; an unseen pair without
// smoothing gives -INFINITY.
//
// # Safety
// `table` must be live; `out` valid for writes.
enum RwStatus rw_table_pmi(const struct RwTable *table,
                           size_t i,
                           size_t j,
                           double smoothing,
                           double *out);

// # Safety
// `table` must be NULL or a handle not yet freed.
void rw_table_free(struct RwTable *table);

// Library defaults for the given objective: X_max 100, η 0.05, 100
// full-batch epochs.
struct RwTrainConfig rw_train_config_default(enum RwObjective objective, size_t dim, uint64_t seed);

// Trains embeddings. `constant` (may be NULL) receives the fitted C (0 for
// PMI).
//
// # Safety
// `table` and `config` must be valid; `out` valid for writes; `constant`
// NULL or valid for writes.
enum RwStatus rw_train(const struct RwTable *table,
                       const struct RwTrainConfig *config,
                       struct RwEnsemble **out,
                       double *constant);

// `√(Σσ²/d) / σ_min` of the word-vector matrix.
//
// # Safety
// `ens` must be live; `out` valid for writes.
enum RwStatus rw_isotropy_ratio(const struct RwEnsemble *ens, double *out);

// Fraction of `samples` random discourses (norm 4/mean‖v‖) whose partition
// function lies within 10% of the sample mean.
//
// # Safety
// `ens` must be live; `out` valid for writes.
enum RwStatus rw_partition_within(const struct RwEnsemble *ens,
                                  size_t samples,
                                  uint64_t seed,
                                  double *out);

// Weighted relative residual of the SN (`constant` used) or PMI closed form.
//
// # Safety
// `ens` and `table` must be live; `out` valid for writes.
enum RwStatus rw_objective_fit(const struct RwEnsemble *ens,
                               double constant,
                               const struct RwTable *table,
                               enum RwObjective objective,
                               double x_max,
                               double *out);

// Analogy engine over unit-normalized copies of the vectors; `a`, `b`, `c`
// are excluded from answers.
//
// # Safety
// `ens` must be live; `out` valid for writes.
enum RwStatus rw_analogy_new(const struct RwEnsemble *ens, struct RwAnalogy **out);

// Best `d` for "a : b :: c : d" by the linear query `v_c − v_a + v_b`.
//
// # Safety
// `engine` must be live; `out` valid for writes.
enum RwStatus rw_analogy_best(const struct RwAnalogy *engine,
                              size_t a,
                              size_t b,
                              size_t c,
                              size_t *out);

// Accuracy of `solver` on an analogy file. `k` is the cluster count (Rd) or
// neighbour-pair count (RdNn); `neighborhood` applies to RdNn, `seed` to Rd.
//
// # Safety
// `engine` must be live; `questions_file` NUL-terminated; `out` valid for
// writes.
enum RwStatus rw_analogy_evaluate(const struct RwAnalogy *engine,
                                  const char *questions_file,
                                  enum RwSolver solver,
                                  size_t k,
                                  size_t neighborhood,
                                  uint64_t seed,
                                  double *out);

// # Safety
// `engine` must be NULL or a handle not yet freed.
void rw_analogy_free(struct RwAnalogy *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDWALK_H */
