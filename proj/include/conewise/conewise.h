#ifndef CONEWISE_H
#define CONEWISE_H

/* C interface to the conewise library. Objects are opaque handles released
 * with their *_free function. Every call returns a status code; on failure
 * cw_last_error() holds a message for the calling thread. Report functions
 * hand back a JSON document that the caller releases with cw_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CW_API __declspec(dllexport)
#else
#define CW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cw_status {
  CW_OK = 0,
  CW_INVALID_ARGUMENT = 1,
  CW_DIMENSION_MISMATCH = 2,
  CW_DEGREE_OUT_OF_RANGE = 3,
  CW_KERNEL_WRAP = 4,
  CW_UNDER_RESOLVED = 5,
  CW_SINGULAR_SYSTEM = 6,
  CW_CERTIFICATION_FAILED = 7,
  CW_PRECONDITION_VIOLATED = 8,
  CW_OUT_OF_BAND = 9,
  CW_IO = 10,
  CW_BUDGET_EXCEEDED = 11,
  CW_INTERNAL = 12
} cw_status;

CW_API const char* cw_version(void);
CW_API const char* cw_status_name(cw_status s);
CW_API const char* cw_last_error(void);
CW_API void cw_string_free(char* s);

typedef struct cw_grid_spec {
  int n;
  int sizes[3];
  double h;
  double origin[3];
} cw_grid_spec;

typedef struct cw_field cw_field;
typedef struct cw_domain cw_domain;
typedef struct cw_potential cw_potential;
typedef struct cw_tent_ops cw_tent_ops;
typedef struct cw_tent cw_tent;

/* Fields. */
typedef enum cw_field_kind {
  CW_FIELD_ZERO = 0,
  CW_FIELD_BUMP = 1,        /* smooth bump times a random polynomial */
  CW_FIELD_CLOSED_BUMP = 2, /* d of a bump form, exactly closed */
  CW_FIELD_BAND = 3,        /* random cosines with |omega| in [radius, omega_hi] */
  CW_FIELD_CLOSED_BAND = 4
} cw_field_kind;

typedef struct cw_field_params {
  cw_field_kind kind;
  int degree;
  double center[3];
  double radius;   /* bump radius, or the lower frequency for band kinds */
  double omega_hi;
  int modes;
  uint64_t seed;
} cw_field_params;

CW_API cw_status cw_field_generate(const cw_grid_spec* grid, const cw_field_params* params, cw_field** out);
CW_API cw_status cw_field_load(const char* prefix, cw_field** out);
CW_API cw_status cw_field_save(const cw_field* u, const char* prefix);
CW_API cw_status cw_field_info(const cw_field* u, cw_grid_spec* grid, int* degree, int* ncomp);
/* Borrowed pointer to component c, valid until the field is freed. */
CW_API cw_status cw_field_component(const cw_field* u, int c, const double** data, size_t* count);
CW_API cw_status cw_field_l2_norm(const cw_field* u, double* out);
CW_API cw_status cw_field_derivative(const cw_field* u, cw_field** out);
/* Zero the field outside the closure of Omega (side 0) or of the lower region (side 1). */
CW_API cw_status cw_field_restrict(cw_field* u, const cw_domain* d, int side);
CW_API void cw_field_free(cw_field* u);

/* Special Lipschitz domains. kind: "flat", "wedge", "random". */
typedef struct cw_domain_params {
  const char* kind;
  double A;
  double sigma;
  uint64_t seed;
  double level;
} cw_domain_params;

CW_API cw_status cw_domain_create(const cw_grid_spec* grid, const cw_domain_params* params, cw_domain** out);
CW_API cw_status cw_domain_load(const char* prefix, cw_domain** out);
CW_API cw_status cw_domain_save(const cw_domain* d, const char* prefix);
CW_API cw_status cw_domain_report(const cw_domain* d, int cone_samples, uint64_t seed, char** json);
CW_API void cw_domain_free(cw_domain* d);

/* Sampled theta_t (kind "theta") or phi_t (kind "phi") written as an artifact. */
CW_API cw_status cw_kernel_save(const char* kind, int n, double sigma, double t, double h, uint64_t seed,
                         const char* prefix);

/* Potential operator T^{a,b}. route: "theta" or "reproducing"; orientation:
 * "upward" or "reflected". */
typedef struct cw_potential_params {
  int n;
  double h;
  double sigma;
  const char* route;
  const char* orientation;
  double a;
  double b;
  int panels_per_octave;
  uint64_t seed;
} cw_potential_params;

CW_API cw_status cw_potential_create(const cw_potential_params* params, cw_potential** out);
CW_API cw_status cw_potential_apply(const cw_potential* P, const cw_field* u, int transform, cw_field** out);
/* Homotopy residuals, support preservation against d (may be NULL) and
 * symbol homogeneity over `frequencies` random frequencies (0 skips). */
CW_API cw_status cw_potential_verify(const cw_potential* P, const cw_field* u, const cw_domain* d, int frequencies,
                              uint64_t seed, char** json);
CW_API void cw_potential_free(cw_potential* P);

/* Tent-space operators on a logarithmic t-ladder. */
typedef struct cw_tent_params {
  double sigma;
  double t_min;
  double t_max;
  int per_octave;
  uint64_t seed;
} cw_tent_params;

typedef struct cw_decomposition_params {
  double p;
  double gamma;
  double nu;
  double beta;
} cw_decomposition_params;

CW_API cw_status cw_tent_ops_create(const cw_grid_spec* grid, const cw_tent_params* params, cw_tent_ops** out);
CW_API void cw_tent_ops_free(cw_tent_ops* ops);

CW_API cw_status cw_tent_q(const cw_tent_ops* ops, const cw_field* u, int transform, cw_tent** out);
CW_API cw_status cw_tent_pi(const cw_tent_ops* ops, const cw_tent* U, int transform, cw_field** out);
CW_API cw_status cw_tent_norm(const cw_tent* U, double p, double* out);
CW_API cw_status cw_tent_save(const cw_tent* U, const char* prefix);
CW_API cw_status cw_tent_load(const char* prefix, cw_tent** out);
CW_API void cw_tent_free(cw_tent* U);

/* Decomposes U (boundary-aware when d is given) and audits every atom. With
 * dump_dir the atoms are written there. */
CW_API cw_status cw_tent_decompose(const cw_tent* U, const cw_domain* d, const cw_decomposition_params* params,
                            const char* dump_dir, char** json);

/* Hardy pipeline u -> Q u -> tent atoms -> Hardy atoms (-> interior atoms
 * when d is given). keep_fields = 0 drops atom fields after synthesis. */
CW_API cw_status cw_hardy_decompose(const cw_tent_ops* ops, const cw_field* u, const cw_domain* d,
                             const cw_decomposition_params* params, int keep_fields, const char* dump_dir,
                             char** json);
CW_API cw_status cw_hardy_beta_check(const cw_tent_ops* ops, const cw_field* u, const cw_domain* d, double a, char** json);

#ifdef __cplusplus
}
#endif

#endif
