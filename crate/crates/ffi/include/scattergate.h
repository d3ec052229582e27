#ifndef SCATTERGATE_H
#define SCATTERGATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of an FFI call.
 */
typedef enum SgStatus {
  SgStatus_Ok = 0,
  SgStatus_NullPointer = 1,
  SgStatus_InvalidInput = 2,
  SgStatus_Numeric = 3,
  SgStatus_Infeasible = 4,
  SgStatus_Panic = 5,
} SgStatus;

/**
 * Line potential.
 */
typedef struct SgPotential SgPotential;

/**
 * Two-level pulse.
 */
typedef struct SgPulse SgPulse;

/**
 * Reflection data on the real momentum axis.
 */
typedef struct SgReflectionData SgReflectionData;

typedef struct SgComplex {
  double re;
  double im;
} SgComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sg_last_error(void);

/**
 * Library version as a static string.
 */
const char *sg_version(void);

/**
 * Parses a potential from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; the output pointer must be writable.
 */
enum SgStatus sg_potential_from_json(const char *json, struct SgPotential **out_pot);

/**
 * # Safety
 * `p` must come from this library and not be freed twice.
 */
void sg_potential_free(struct SgPotential *p);

/**
 * Monodromy data `a(k)`, `b(k)` of a potential.
 *
 * # Safety
 * Pointers must be valid; `a` and `b` writable.
 */
enum SgStatus sg_solve_scattering(const struct SgPotential *pot,
                                  double k,
                                  struct SgComplex *a,
                                  struct SgComplex *b);

/**
 * Parses reflection data (`k`, `re_R`, `im_R`, `bound_states`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; the output pointer must be writable.
 */
enum SgStatus sg_reflection_from_json(const char *json, struct SgReflectionData **out_data);

/**
 * Reflection data realizing a JSON list of `{k, t, r}` gate targets.
 *
 * # Safety
 * `targets_json` must be a NUL-terminated string; the output pointer must be writable.
 */
enum SgStatus sg_build_scattering_data(const char *targets_json,
                                       struct SgReflectionData **out_data);

/**
 * # Safety
 * `d` must come from this library and not be freed twice.
 */
void sg_reflection_free(struct SgReflectionData *d);

/**
 * Transmission amplitude rebuilt from the reflection data.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SgStatus sg_reconstruct_transmission(const struct SgReflectionData *data,
                                          double k,
                                          struct SgComplex *t);

/**
 * Potential recovered from reflection data on `[−x_max, x_max]`; a
 * non-positive `x_max` picks the window from the kernel decay.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SgStatus sg_invert(const struct SgReflectionData *data,
                        double x_max,
                        double step,
                        struct SgPotential **out_pot);

/**
 * Scattering matrix `τ(a, b)` (4 entries, row-major).
 *
 * # Safety
 * `s` must have room for 4 values.
 */
enum SgStatus sg_tau(struct SgComplex a, struct SgComplex b, struct SgComplex *s);

/**
 * Parses a pulse (`envelope`, `detuning`, optional `window`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; the output pointer must be writable.
 */
enum SgStatus sg_pulse_from_json(const char *json, struct SgPulse **out_pulse);

/**
 * # Safety
 * `p` must come from this library and not be freed twice.
 */
void sg_pulse_free(struct SgPulse *p);

/**
 * Two-level scattering matrix at spectral parameter `zeta` (4 entries).
 *
 * # Safety
 * Pointers must be valid; `s` must have room for 4 values.
 */
enum SgStatus sg_scattering_matrix(const struct SgPulse *pulse, double zeta, struct SgComplex *s);

/**
 * Operator-Schmidt values of the two-dipole evolution. `params_json` may be
 * null for the default parameters. `verdict` receives 0 (product),
 * 1 (indeterminate) or 2 (entangling).
 *
 * # Safety
 * `schmidt` must have room for 4 values; `verdict` must be writable.
 */
enum SgStatus sg_entanglement(const char *params_json, double *schmidt, int32_t *verdict);

/**
 * Monodromy of a Fuchsian system (`poles`, `residues`) around a loop, both
 * given as JSON (4 entries, row-major).
 *
 * # Safety
 * Strings must be NUL-terminated; `m` must have room for 4 values.
 */
enum SgStatus sg_monodromy(const char *system_json, const char *loop_json, struct SgComplex *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCATTERGATE_H */
