#ifndef ROTNBODY_H
#define ROTNBODY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RnbStatus {
  RNB_STATUS_OK = 0,
  RNB_STATUS_NOT_VERIFIED = 1,
  RNB_STATUS_NUMERICAL = 2,
  RNB_STATUS_CONFIG = 3,
  RNB_STATUS_NULL_POINTER = 4,
  RNB_STATUS_INVALID_ARGUMENT = 5,
  RNB_STATUS_PANIC = 6,
} RnbStatus;

typedef struct RnbCertificate RnbCertificate;

typedef struct RnbConfig RnbConfig;

typedef struct RnbOrbit RnbOrbit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *rnb_last_error(void);

// Library version, static storage.
const char *rnb_version(void);

// Period `2 pi / omega` of the `p:q` orbit of `n` bodies.
//
// # Safety
// `out` must be a valid pointer to a double.
enum RnbStatus rnb_period(size_t n, uint64_t p, uint64_t q, double *out);

// Parse a run configuration. Relative seed paths are taken relative to
// `base_dir`, which may be null for the current directory.
//
// # Safety
// `json` must be a NUL-terminated string, `base_dir` null or one, and
// `out` a valid pointer.
enum RnbStatus rnb_config_from_json(const char *json, const char *base_dir, struct RnbConfig **out);

// # Safety
// `cfg` must come from `rnb_config_from_json` and not be used afterwards.
void rnb_config_free(struct RnbConfig *cfg);

// Seed and Newton-refine the configured orbit.
//
// # Safety
// `cfg` must be a live config handle and `out` a valid pointer.
enum RnbStatus rnb_solve(const struct RnbConfig *cfg, struct RnbOrbit **out);

// # Safety
// `orbit` must come from `rnb_solve` and not be used afterwards.
void rnb_orbit_free(struct RnbOrbit *orbit);

// Sup-norm of the Galerkin residual after the last Newton step.
//
// # Safety
// `orbit` must be a live handle and `out` a valid pointer.
enum RnbStatus rnb_orbit_residual(const struct RnbOrbit *orbit, double *out);

// Rotating-frame position `u(t)` of the reference body, written to `out[0..3]`.
//
// # Safety
// `orbit` must be a live handle and `out` point to three doubles.
enum RnbStatus rnb_orbit_position(const struct RnbOrbit *orbit, double t, double *out);

// Write the refined coefficients (with their phase reference) as JSON.
//
// # Safety
// `orbit` must be a live handle and `path` a NUL-terminated string.
enum RnbStatus rnb_orbit_write(const struct RnbOrbit *orbit, const char *path);

// Run the validator. Returns `Ok` when the proof succeeds and
// `NotVerified` when it does not; a certificate is produced in both cases.
//
// # Safety
// `orbit` must be a live handle and `out` a valid pointer.
enum RnbStatus rnb_validate(const struct RnbOrbit *orbit,
                            double r_star,
                            struct RnbCertificate **out);

// `Y0, Z0, Z1, Z2` written to `out[0..4]`.
//
// # Safety
// `cert` must be a live handle and `out` point to four doubles.
enum RnbStatus rnb_certificate_bounds(const struct RnbCertificate *cert, double *out);

// Validated radius interval; `NotVerified` and untouched outputs when the
// proof failed.
//
// # Safety
// `cert` must be a live handle, `lo` and `hi` valid pointers.
enum RnbStatus rnb_certificate_radius(const struct RnbCertificate *cert, double *lo, double *hi);

// Certificate as JSON; release with `rnb_string_free`. Null on failure.
//
// # Safety
// `cert` must be a live handle.
char *rnb_certificate_json(const struct RnbCertificate *cert);

// # Safety
// `s` must come from this library and not be used afterwards.
void rnb_string_free(char *s);

// # Safety
// `cert` must come from `rnb_validate` and not be used afterwards.
void rnb_certificate_free(struct RnbCertificate *cert);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTNBODY_H */
