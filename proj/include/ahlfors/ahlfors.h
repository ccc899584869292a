/* C interface to the ahlfors library.
 *
 * Handles are opaque and owned by the caller; release each with its _free
 * function. Every call that can fail returns an ahlfors_status and leaves a
 * message for ahlfors_last_error() on the calling thread. */
#ifndef AHLFORS_AHLFORS_H
#define AHLFORS_AHLFORS_H

#include <stddef.h>
#include <stdint.h>

#if defined(AHLFORS_BUILDING_LIBRARY)
#define AHLFORS_API __attribute__((visibility("default")))
#else
#define AHLFORS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ahlfors_status {
  AHLFORS_OK = 0,
  AHLFORS_INVALID_ARGUMENT = 1,
  AHLFORS_INSUFFICIENT_SCALES,
  AHLFORS_DEGENERATE_SCALE,
  AHLFORS_BOUNDARY_SCALE,
  AHLFORS_GUARD_VIOLATION,
  AHLFORS_INSUFFICIENT_GEOMETRY,
  AHLFORS_NOT_CONTRACTIVE,
  AHLFORS_NON_CONVERGENCE,
  AHLFORS_HYPOTHESIS_VIOLATION,
  AHLFORS_INVALID_REGIME,
  AHLFORS_DEGENERATE_RADIUS,
  AHLFORS_CONFIG_ERROR,
  AHLFORS_IO_ERROR,
  AHLFORS_INTERNAL_ERROR = 100
} ahlfors_status;

typedef enum ahlfors_kernel_kind {
  AHLFORS_KERNEL_BESSEL = 0,
  AHLFORS_KERNEL_RIESZ = 1,
  AHLFORS_KERNEL_FRAC_DERIV = 2
} ahlfors_kernel_kind;

typedef struct ahlfors_space ahlfors_space;
typedef struct ahlfors_ai ahlfors_ai;
typedef struct ahlfors_kernel ahlfors_kernel;

AHLFORS_API const char* ahlfors_version(void);
AHLFORS_API const char* ahlfors_status_string(ahlfors_status status);
/* Message of the last failed call on this thread; "" if none. */
AHLFORS_API const char* ahlfors_last_error(void);
AHLFORS_API void ahlfors_set_threads(int threads);

/* ---- spaces */
AHLFORS_API ahlfors_status ahlfors_space_line(double half_length, int n_points, ahlfors_space** out);
AHLFORS_API ahlfors_status ahlfors_space_gasket(int level, int dilations, ahlfors_space** out);
/* Space descriptor JSON, e.g. {"kind":"line","half_length":10,"n_points":1001}. */
AHLFORS_API ahlfors_status ahlfors_space_from_json(const char* json, ahlfors_space** out);
AHLFORS_API void ahlfors_space_free(ahlfors_space* space);
AHLFORS_API size_t ahlfors_space_size(const ahlfors_space* space);
AHLFORS_API double ahlfors_space_dim(const ahlfors_space* space);
/* Writes ambient_dim coordinates into coords (room for 2 is always enough)
 * and the point's weight. */
AHLFORS_API ahlfors_status ahlfors_space_point(const ahlfors_space* space, size_t i, double* coords,
                                               int* ambient_dim, double* weight);
AHLFORS_API ahlfors_status ahlfors_space_export_csv(const ahlfors_space* space, const char* path);

/* ---- approximation of the identity on a log grid [t_min, t_max];
 * pass t_min <= 0 or t_max <= 0 for the space's default grid. */
AHLFORS_API ahlfors_status ahlfors_ai_build(const ahlfors_space* space, double t_min, double t_max,
                                            double points_per_decade, ahlfors_ai** out);
AHLFORS_API void ahlfors_ai_free(ahlfors_ai* ai);
AHLFORS_API size_t ahlfors_ai_scale_count(const ahlfors_ai* ai);
AHLFORS_API double ahlfors_ai_scale(const ahlfors_ai* ai, size_t k);
/* out[i] = (S_{t_k} f)(x_i); f and out have ahlfors_space_size entries. */
AHLFORS_API ahlfors_status ahlfors_ai_apply_s(const ahlfors_ai* ai, size_t k, const double* f, double* out);

/* ---- kernels */
AHLFORS_API ahlfors_status ahlfors_kernel_build(const ahlfors_ai* ai, ahlfors_kernel_kind kind, double alpha,
                                                ahlfors_kernel** out);
AHLFORS_API void ahlfors_kernel_free(ahlfors_kernel* kernel);
AHLFORS_API double ahlfors_kernel_entry(const ahlfors_kernel* kernel, size_t i, size_t j);
/* Applies J, I_alpha or D_alpha. valid_out (may be NULL) receives 1 on the
 * kernel's guarded rows and 0 elsewhere. */
AHLFORS_API ahlfors_status ahlfors_kernel_apply(const ahlfors_kernel* kernel, const double* f, double* out,
                                                unsigned char* valid_out);

/* ---- operators */
/* Estimated ||I - (I + D) J||_p on the guarded rows. */
AHLFORS_API ahlfors_status ahlfors_contraction_norm(const ahlfors_kernel* bessel, const ahlfors_kernel* frac_deriv,
                                                    double p, uint64_t seed, double* estimate);
/* Solves J g = f by the Neumann series; iterations may be NULL. */
AHLFORS_API ahlfors_status ahlfors_invert_bessel(const ahlfors_kernel* bessel, const ahlfors_kernel* frac_deriv,
                                                 const double* f, double tol, double* g, size_t* iterations);

/* ---- experiment runner */
/* Runs a JSON config; *exit_code is 0 when every check passes, 1 otherwise.
 * output_dir_override may be NULL and seed_override < 0 keeps the config's
 * seed. failing (may be NULL) receives one failing check per line; free it
 * with ahlfors_string_free. */
AHLFORS_API ahlfors_status ahlfors_run_config(const char* json, const char* output_dir_override,
                                              int64_t seed_override, int* exit_code, char** failing);
/* Dry-run plan; release the string with ahlfors_string_free. */
AHLFORS_API ahlfors_status ahlfors_describe_config(const char* json, char** text);
AHLFORS_API void ahlfors_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
