#ifndef MORPHGUARD_H
#define MORPHGUARD_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum MgStatus {
  MG_STATUS_OK = 0,
  // A required pointer argument was null.
  MG_STATUS_NULL_POINTER = 1,
  MG_STATUS_CONFIG = 2,
  MG_STATUS_DATA = 3,
  MG_STATUS_NUMERIC = 4,
  MG_STATUS_IO = 5,
  MG_STATUS_PANIC = 6,
} MgStatus;

// Opaque model handle.
typedef struct MgModel MgModel;

typedef struct MgRmmrMinimum {
  double threshold;
  double value;
  double mmpmr;
  double fnmr;
} MgRmmrMinimum;

typedef struct MgEllipse {
  double center_x;
  double center_y;
  double width;
  double height;
  double orientation;
  // `(width + height) / 2`.
  double size;
} MgEllipse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next call on the same thread.
const char *mg_last_error_message(void);

// Creates a freshly initialized model.
//
// # Safety
// `hidden_dims` must be valid for `num_hidden` reads and `out` for one write.
enum MgStatus mg_model_new(size_t input_dim,
                           const size_t *hidden_dims,
                           size_t num_hidden,
                           size_t embedding_dim,
                           size_t num_classes,
                           uint64_t seed,
                           struct MgModel **out);

// # Safety
// `path` must be a NUL-terminated string and `out` valid for one write.
enum MgStatus mg_model_load(const char *path, struct MgModel **out);

// # Safety
// `model` must come from this library; `path` must be NUL-terminated.
enum MgStatus mg_model_save(const struct MgModel *model, const char *path);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void mg_model_free(struct MgModel *model);

// # Safety
// Each non-null out-pointer must be valid for one write.
enum MgStatus mg_model_dims(const struct MgModel *model,
                            size_t *input_dim,
                            size_t *embedding_dim,
                            size_t *num_classes);

// Writes the unit-norm embedding of `input` into `out`, which must hold
// exactly the model's embedding dimension.
//
// # Safety
// `input` must be valid for `input_len` reads and `out` for `out_len` writes.
enum MgStatus mg_model_embed(const struct MgModel *model,
                             const double *input_ptr,
                             size_t input_len,
                             double *out,
                             size_t out_len);

// `cos(clamp(acos(c) + m, 0, π))`.
//
// # Safety
// `out` must be valid for one write.
enum MgStatus mg_margin_adjust(double cos_theta, double m, double *out);

// Margin softmax cross-entropy over `n` cosines; `grad` receives the
// gradient with respect to each cosine.
//
// # Safety
// `cosines` must be valid for `n` reads, `grad` for `n` writes, `loss` for one.
enum MgStatus mg_margin_softmax_ce(const double *cosines,
                                   size_t n,
                                   size_t target,
                                   double scale,
                                   double m,
                                   double *loss,
                                   double *grad);

// MMPMR at `tau` over `num_trials` trials stored row-major with
// `subjects` scores each.
//
// # Safety
// `scores` must be valid for `num_trials * subjects` reads and `out` for one write.
enum MgStatus mg_mmpmr(const double *scores,
                       size_t num_trials,
                       size_t subjects,
                       double tau,
                       double *out);

// # Safety
// `out` must be valid for one write.
enum MgStatus mg_rmmr(double mmpmr_value, double fnmr_value, double *out);

// Minimum RMMR over every observed threshold.
//
// # Safety
// Each array must be valid for its stated length; `out` for one write.
enum MgStatus mg_min_rmmr(const double *scores,
                          size_t num_trials,
                          size_t subjects,
                          const double *genuine,
                          size_t num_genuine,
                          const double *impostor,
                          size_t num_impostor,
                          struct MgRmmrMinimum *out);

// Averages even- and odd-indexed coordinates into `out[0]`, `out[1]`.
//
// # Safety
// `feature` must be valid for `len` reads and `out` for two writes.
enum MgStatus mg_project_2d(const double *feature, size_t len, double *out);

// Confidence ellipse of `n` points given as interleaved `x, y` pairs.
//
// # Safety
// `xy` must be valid for `2 * n` reads and `out` for one write.
enum MgStatus mg_confidence_ellipse(const double *xy,
                                    size_t n,
                                    double level,
                                    struct MgEllipse *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MORPHGUARD_H */
