/* C interface for the faircrowd crowdsourced-labeling library. */

#ifndef FAIRCROWD_H
#define FAIRCROWD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible function.
typedef enum FcStatus {
  // The call succeeded.
  FC_STATUS_OK = 0,
  // A required pointer argument was NULL.
  FC_STATUS_NULL_ARGUMENT = 1,
  // A parameter was outside its admissible range.
  FC_STATUS_INVALID_ARGUMENT = 2,
  // The operation needs ground-truth labels the dataset does not carry.
  FC_STATUS_TRUTH_REQUIRED = 3,
  // A buffer or array length does not match the dataset.
  FC_STATUS_LENGTH_MISMATCH = 4,
  // Reading or writing a file failed.
  FC_STATUS_IO = 5,
  // The input data failed validation (bad labels, empty groups, ...).
  FC_STATUS_DATA = 6,
  // An internal invariant was violated.
  FC_STATUS_INTERNAL = 7,
} FcStatus;

// Label-aggregation method selector.
typedef enum FcMethod {
  // Majority vote with ties predicting 1.
  FC_METHOD_MAJORITY_VOTE = 0,
  // Posterior weighting under a confusion model estimated against truth.
  FC_METHOD_BAYES = 1,
  // One-coin EM without ground truth.
  FC_METHOD_DAWID_SKENE = 2,
} FcMethod;

// A vote matrix together with per-task protected groups and optional truth.
typedef struct FcDataset FcDataset;

// A fitted fair classifier bound to the posterior table it was trained on.
typedef struct FcFairFit FcFairFit;

// Per-task posterior probabilities produced by an aggregation method.
typedef struct FcPosterior FcPosterior;

// Tuning knobs of the fairness post-processor; `fc_fair_config_default`
// supplies the standard values.
typedef struct FcFairConfig {
  // Demographic-parity budget, >= 0.
  double epsilon;
  // Softmax temperature of the smoothed risk objective.
  double softmax_c;
  // Half-width of the randomization band around each threshold; 0 makes
  // the classifier deterministic.
  double delta;
  // Width of the preprocessed upper posterior tail, in [0, 1).
  double alpha;
  // Half-width of the dual-weight search interval.
  double beta_bound;
  // Grid points per randomization-weight axis, >= 2.
  size_t omega_grid;
} FcFairConfig;

// Parameters of a fitted randomized group-threshold classifier.
typedef struct FcClassifierParams {
  // Selected dual weight; 0 means the parity constraint was inactive.
  double beta_star;
  // Per-group decision thresholds, indexed by group.
  double tau[2];
  // Per-group randomization weights inside the threshold band.
  double omega[2];
  // Band half-width.
  double delta;
  // Estimated group marginals N_a / N.
  double pi_hat[2];
  // Distance between the achieved parity gap and its target (0 when the
  // band mass could hit the budget exactly).
  double residual;
  // 1 when the dual-weight search ended on the search boundary.
  uint8_t at_boundary;
} FcClassifierParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fc_version(void);

// Copies the calling thread's last error message into `buffer` as a
// NUL-terminated string, truncating to `capacity` bytes (NUL included).
// Returns the full message length in bytes, NUL excluded; 0 means the last
// call on this thread succeeded. `buffer` may be NULL to query the length.
size_t fc_last_error_message(char *buffer, size_t capacity);

// The sup-pmf constant appearing in the small-crowd parity bound.
double fc_baillon_eta(void);

// Builds a dataset from parallel vote arrays.
//
// `vote_tasks`, `vote_annotators`, and `vote_labels` hold `n_votes` entries
// each: task index, annotator index, and binary label (0 or 1) of one vote.
// `groups` holds one entry in {0, 1} per task. `truth` is either NULL or
// one binary entry per task. Every task needs at least one vote and no
// annotator may vote twice on a task.
enum FcStatus fc_dataset_new(size_t n_tasks,
                             size_t n_annotators,
                             size_t n_votes,
                             const size_t *vote_tasks,
                             const size_t *vote_annotators,
                             const uint8_t *vote_labels,
                             const uint8_t *groups,
                             const uint8_t *truth,
                             struct FcDataset **out);

// Loads a dataset from CSV files: votes (`task_id,annotator_id,label`),
// groups (`task_id,a`), and optionally truth (`task_id,y`; pass NULL to
// skip).
enum FcStatus fc_dataset_load_csv(const char *votes_path,
                                  const char *groups_path,
                                  const char *truth_path,
                                  struct FcDataset **out);

// Number of tasks in the dataset; 0 for NULL.
size_t fc_dataset_n_tasks(const struct FcDataset *dataset);

// Size of the dataset's annotator index space; 0 for NULL.
size_t fc_dataset_n_annotators(const struct FcDataset *dataset);

// 1 when the dataset carries ground-truth labels, else 0.
uint8_t fc_dataset_has_truth(const struct FcDataset *dataset);

// Releases a dataset. NULL is a no-op.
void fc_dataset_free(struct FcDataset *dataset);

// Aggregates the dataset's votes into per-task posteriors with the chosen
// method. `FC_METHOD_BAYES` requires ground truth in the dataset.
enum FcStatus fc_aggregate(const struct FcDataset *dataset,
                           enum FcMethod method,
                           struct FcPosterior **out);

// Number of tasks covered by the posterior table; 0 for NULL.
size_t fc_posterior_n_tasks(const struct FcPosterior *posterior);

// Copies the per-task probabilities of class 1 into `buffer` (`capacity`
// elements, must cover every task).
enum FcStatus fc_posterior_values(const struct FcPosterior *posterior,
                                  double *buffer,
                                  size_t capacity);

// Copies hard labels (1 iff the posterior is >= 1/2) into `buffer`.
enum FcStatus fc_posterior_labels(const struct FcPosterior *posterior,
                                  uint8_t *buffer,
                                  size_t capacity);

// Releases a posterior table. NULL is a no-op.
void fc_posterior_free(struct FcPosterior *posterior);

// The standard post-processor configuration at parity budget `epsilon`.
struct FcFairConfig fc_fair_config_default(double epsilon);

// Fits the optimal budget-constrained randomized classifier on a posterior
// table. The returned fit keeps its own preprocessed copy of the
// posteriors, so the input may be freed afterwards.
enum FcStatus fc_fairify(const struct FcPosterior *posterior,
                         const struct FcDataset *dataset,
                         const struct FcFairConfig *config,
                         struct FcFairFit **out);

// Copies the fitted classifier's parameters into `out`.
enum FcStatus fc_fair_fit_params(const struct FcFairFit *fit, struct FcClassifierParams *out);

// Evaluates the fitted classifier on the dataset it was trained against:
// writes each task's probability of predicting 1 into `q_out` and one
// sampled hard labeling into `labels_out` (independent per-task draws
// derived from `seed`). Either output may be NULL to skip it; `capacity`
// applies to both.
enum FcStatus fc_fair_fit_apply(const struct FcFairFit *fit,
                                const struct FcDataset *dataset,
                                uint64_t seed,
                                double *q_out,
                                uint8_t *labels_out,
                                size_t capacity);

// Releases a classifier fit. NULL is a no-op.
void fc_fair_fit_free(struct FcFairFit *fit);

// Baseline parity repair: hardens the posteriors and flips labels near the
// group rates until the gap is within `epsilon`. Writes one label per task
// into `labels_out`.
enum FcStatus fc_post_td(const struct FcPosterior *posterior,
                         const struct FcDataset *dataset,
                         double epsilon,
                         uint64_t seed,
                         uint8_t *labels_out,
                         size_t capacity);

// Demographic-parity gap |rate_1 - rate_0| of per-task positive
// probabilities (hard labels are the 0/1 special case). `len` must equal
// the dataset's task count.
enum FcStatus fc_dp_gap(const double *q,
                        size_t len,
                        const struct FcDataset *dataset,
                        double *gap_out);

// Binary F1 (positive class 1) and accuracy of hard labels against the
// dataset's ground truth.
enum FcStatus fc_f1_accuracy(const uint8_t *labels,
                             size_t len,
                             const struct FcDataset *dataset,
                             double *f1_out,
                             double *accuracy_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRCROWD_H */
