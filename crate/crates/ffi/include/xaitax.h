#ifndef XAITAX_H
#define XAITAX_H

#include <stddef.h>
#include <stdint.h>

typedef enum {
  XTAX_AGGREGATION_AVERAGE = 0,
  XTAX_AGGREGATION_SUM = 1,
} XtaxAggregation;

typedef enum {
  XTAX_FAMILY_GAUSSIAN = 0,
  XTAX_FAMILY_SHT = 1,
} XtaxFamily;

typedef enum {
  XTAX_STATUS_OK = 0,
  XTAX_STATUS_NULL_POINTER = 1,
  XTAX_STATUS_INVALID_UTF8 = 2,
  XTAX_STATUS_INVALID_ARGUMENT = 3,
  XTAX_STATUS_OUT_OF_RANGE = 4,
  XTAX_STATUS_EMPTY = 5,
  XTAX_STATUS_DIMENSION = 6,
  XTAX_STATUS_TOO_MANY_FEATURES = 7,
  XTAX_STATUS_RANK_DEFICIENT = 8,
  XTAX_STATUS_NOT_CONVERGED = 9,
  XTAX_STATUS_DATA = 10,
  XTAX_STATUS_IO = 11,
  XTAX_STATUS_PANIC = 12,
} XtaxStatus;

/**
 * Trained SVM classifier.
 */
typedef struct XtaxSvm XtaxSvm;

/**
 * Single-output model: `row` has `len` entries.
 */
typedef double (*XtaxModelFn)(const double *row, size_t len, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library; valid until the next call on this thread.
 */
const char *xtax_last_error(void);

/**
 * Library version, a static string.
 */
const char *xtax_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void xtax_string_free(char *s);

/**
 * # Safety
 * `result` must be valid for writes.
 */
XtaxStatus xtax_total_two(double e1, double e2, double *result);

/**
 * # Safety
 * `values` must point to `len` doubles; `result` must be valid for writes.
 */
XtaxStatus xtax_total_explainability(const double *values, size_t len, double *result);

/**
 * # Safety
 * `result` must be valid for writes.
 */
XtaxStatus xtax_understandability(double omega, double omega_b, XtaxFamily decline, double *result);

/**
 * `E = I * C * U(omega)`.
 *
 * # Safety
 * `result` must be valid for writes.
 */
XtaxStatus xtax_explainability(double interpretability,
                               double completeness,
                               double omega,
                               double omega_b,
                               XtaxFamily decline,
                               double *result);

/**
 * Train the default RBF SVM on the bundled Iris table.
 *
 * # Safety
 * `svm_out` must be valid for writes.
 */
XtaxStatus xtax_svm_train_iris(XtaxSvm **svm_out);

/**
 * Train an RBF SVM on a row-major `n_rows x n_cols` matrix with class
 * indices `labels` (`0..n_classes`).
 *
 * # Safety
 * `x` must hold `n_rows * n_cols` doubles, `labels` `n_rows` entries;
 * `svm_out` must be valid for writes.
 */
XtaxStatus xtax_svm_train(const double *x,
                          size_t n_rows,
                          size_t n_cols,
                          const uint32_t *labels,
                          size_t n_classes,
                          double c,
                          XtaxSvm **svm_out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `svm_out` valid for writes.
 */
XtaxStatus xtax_svm_from_json(const char *json, XtaxSvm **svm_out);

/**
 * # Safety
 * `svm` must be a live handle; `json_out` valid for writes. Free the
 * string with [`xtax_string_free`].
 */
XtaxStatus xtax_svm_to_json(const XtaxSvm *svm, char **json_out);

/**
 * # Safety
 * `svm` must be null or a handle from this library, freed once.
 */
void xtax_svm_free(XtaxSvm *svm);

/**
 * # Safety
 * `svm` must be a live handle; out pointers valid for writes.
 */
XtaxStatus xtax_svm_shape(const XtaxSvm *svm, size_t *n_features, size_t *n_outputs);

/**
 * Decision values for one row: `n_outputs` margins.
 *
 * # Safety
 * `row` must hold `len` doubles, `values` `values_len` writable doubles.
 */
XtaxStatus xtax_svm_decision(const XtaxSvm *svm,
                             const double *row,
                             size_t len,
                             double *values,
                             size_t values_len);

/**
 * # Safety
 * `row` must hold `len` doubles; `class_out` valid for writes.
 */
XtaxStatus xtax_svm_predict_class(const XtaxSvm *svm,
                                  const double *row,
                                  size_t len,
                                  size_t *class_out);

/**
 * Complexity of the SVM+prototype rules extracted against the given
 * training data.
 *
 * # Safety
 * `x` must hold `n_rows * n_features` doubles, `labels` `n_rows` entries;
 * the out pointers must be valid for writes.
 */
XtaxStatus xtax_svm_rule_complexity(const XtaxSvm *svm,
                                    const double *x,
                                    size_t n_rows,
                                    const uint32_t *labels,
                                    size_t prototypes_per_class,
                                    XtaxAggregation aggregation,
                                    size_t *n_rules,
                                    double *complexity);

/**
 * Exact Shapley values of a callback model (at most 15 features).
 * `background` is row-major `n_background x arity`; `phi0` may be null.
 *
 * # Safety
 * Pointers must match the given lengths; `model` is called on this thread
 * only, with `user_data` passed through.
 */
XtaxStatus xtax_shapley_exact(XtaxModelFn model,
                              void *user_data,
                              const double *instance,
                              size_t arity,
                              const double *background,
                              size_t n_background,
                              double *phi,
                              size_t phi_len,
                              double *phi0);

/**
 * KernelSHAP of a callback model. `budget == 0` enumerates every coalition.
 *
 * # Safety
 * As for [`xtax_shapley_exact`].
 */
XtaxStatus xtax_shapley_kernel(XtaxModelFn model,
                               void *user_data,
                               const double *instance,
                               size_t arity,
                               const double *background,
                               size_t n_background,
                               size_t budget,
                               uint64_t seed,
                               double *phi,
                               size_t phi_len,
                               double *phi0);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XAITAX_H */
