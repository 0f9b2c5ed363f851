/*
 * C interface to the Poisson-Nijenhuis algebroid calculus.
 *
 * Conventions:
 *   - Every call returns a PN_* status code (or a pointer where noted).
 *   - On failure, pn_last_error() returns a copy of the message for the
 *     most recent failing call on this thread.
 *   - Every char* handed out by the library is owned by the caller and
 *     must be released with pn_string_free().
 *
 * Link against the pncalc_ffi static or shared library.
 */

#ifndef PNCALC_H
#define PNCALC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* All checks passed / the call succeeded. */
#define PN_OK 0
/* The identity suite ran and at least one check exceeded its tolerance. */
#define PN_ERR_CHECK_FAILED 1
/* A null pointer, a length mismatch, or an argument the system rejects. */
#define PN_ERR_INVALID_ARGUMENT 2
/* The target is neither a built-in example nor a loadable JSON config. */
#define PN_ERR_UNKNOWN_SYSTEM 3
/* Evaluation failed (singular matrix, domain violation, and the like). */
#define PN_ERR_EVAL 4

/* A loaded system. Opaque: only the library reads its layout. */
typedef struct PnSystem PnSystem;

/*
 * The most recent failure message on this thread as a caller-owned copy,
 * or NULL when the last call succeeded.
 */
char *pn_last_error(void);

/* Releases a string returned by the library. NULL is tolerated. */
void pn_string_free(char *s);

/*
 * Loads a built-in example (toda-physical[-n], toda-extended[-n],
 * toda-flaschka[-n], toda-algebroid[-n]; the suffix selects the number of
 * chain sites) or a JSON config path, and writes the handle to out.
 * Release the handle with pn_system_free().
 */
int32_t pn_system_open(const char *target, PnSystem **out);

/* Releases a system handle. NULL is tolerated. */
void pn_system_free(PnSystem *sys);

/* The system's name as a caller-owned string, or NULL for a NULL handle. */
char *pn_system_name(const PnSystem *sys);

/* Base dimension (coordinate count), or -1 for a NULL handle. */
int32_t pn_system_dim(const PnSystem *sys);

/* Frame rank (anchor section count), or -1 for a NULL handle. */
int32_t pn_system_rank(const PnSystem *sys);

/*
 * Runs the identity suite for the system's formulation over `points`
 * seeded samples, each check passing when its worst residual stays within
 * `tolerance`. When out_json is non-NULL it receives the full report as a
 * caller-owned JSON string whether or not the checks pass. Returns PN_OK
 * when every check passes and PN_ERR_CHECK_FAILED otherwise.
 */
int32_t pn_system_validate(const PnSystem *sys, size_t points,
                           double tolerance, uint64_t seed, char **out_json);

/*
 * Evaluates the ladder Hamiltonian h_index (negative indices through
 * negative powers of the recursion operator, 0 for the log-determinant,
 * positive for traces) at a point with len == pn_system_dim coordinates,
 * writing the value to out.
 */
int32_t pn_hamiltonian_value(const PnSystem *sys, int64_t index,
                             const double *point, size_t len, double *out);

/*
 * Evaluates the hierarchy vector field X^(index) pushed down to the base
 * coordinates at a point, writing len doubles (one per coordinate) to out.
 */
int32_t pn_hierarchy_field(const PnSystem *sys, int64_t index,
                           const double *point, size_t len, double *out);

/*
 * Integrates the flow of the ladder Hamiltonian h_hamiltonian along the
 * bracket N^bracket pi0 from x0 (or the domain midpoint when x0 is NULL)
 * to time t with step dt. Writes the final state to out_state and the
 * worst relative drift among the conserved ladder to out_drift; either
 * output may be NULL to skip it. The state has len == pn_system_dim
 * coordinates.
 */
int32_t pn_flow_final_state(const PnSystem *sys, int64_t hamiltonian,
                            int64_t bracket, const double *x0, size_t len,
                            double t, double dt, double *out_state,
                            double *out_drift);

#ifdef __cplusplus
}
#endif

#endif /* PNCALC_H */
