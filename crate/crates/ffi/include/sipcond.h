/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SIPCOND_H
#define SIPCOND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Jump-rate rule codes for `sipcond_simulate_limit`.
#define SIPCOND_JUMP_PROPORTIONAL 0

#define SIPCOND_JUMP_CONSTANT 1

// Diffusion-constant codes for `sipcond_simulate_limit`.
#define SIPCOND_DIFFUSION_FULL 0

#define SIPCOND_DIFFUSION_HALF 1

#define SIPCOND_DIFFUSION_QUARTER 2

// Result of every fallible call.
typedef enum SipcondStatus {
  SIPCOND_STATUS_OK = 0,
  SIPCOND_STATUS_NULL_POINTER = 1,
  SIPCOND_STATUS_INVALID_ARGUMENT = 2,
  SIPCOND_STATUS_INVALID_KERNEL = 3,
  SIPCOND_STATUS_NOT_ON_SIMPLEX = 4,
  SIPCOND_STATUS_BUDGET_EXCEEDED = 5,
  SIPCOND_STATUS_RUNTIME = 6,
  SIPCOND_STATUS_PANIC = 7,
} SipcondStatus;

// Opaque rate kernel.
typedef struct SipcondKernel SipcondKernel;

// Opaque sampled trajectory.
typedef struct SipcondTrajectory SipcondTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *sipcond_last_error(void);

uint64_t sipcond_derive_replica_seed(uint64_t master_seed, uint64_t replica);

// Builds a kernel from a row-major `n × n` rate matrix.
enum SipcondStatus sipcond_kernel_from_matrix(const double *rates,
                                              size_t n,
                                              struct SipcondKernel **out);

// Builds a kernel from a family name such as `"cycle:4"`.
enum SipcondStatus sipcond_kernel_from_family(const char *spec, struct SipcondKernel **out);

// Number of sites, or 0 for a null handle.
size_t sipcond_kernel_sites(const struct SipcondKernel *kernel);

void sipcond_kernel_free(struct SipcondKernel *kernel);

// Particle system with `n` particles started at `round(n · start)`.
enum SipcondStatus sipcond_simulate_sip(const struct SipcondKernel *kernel,
                                        uint64_t n,
                                        double m,
                                        double alpha,
                                        const double *start,
                                        size_t sites,
                                        const double *times,
                                        size_t n_times,
                                        uint64_t seed,
                                        struct SipcondTrajectory **out);

// Limit jump-diffusion; `jump_rule` and `diffusion_constant` take the
// `SIPCOND_JUMP_*` and `SIPCOND_DIFFUSION_*` codes.
enum SipcondStatus sipcond_simulate_limit(const struct SipcondKernel *kernel,
                                          double alpha,
                                          uint32_t jump_rule,
                                          uint32_t diffusion_constant,
                                          double dt,
                                          const double *start,
                                          size_t sites,
                                          const double *times,
                                          size_t n_times,
                                          uint64_t seed,
                                          struct SipcondTrajectory **out);

// Corner random walk started at `start_site`.
enum SipcondStatus sipcond_simulate_corner_chain(const struct SipcondKernel *kernel,
                                                 double alpha,
                                                 size_t start_site,
                                                 const double *times,
                                                 size_t n_times,
                                                 uint64_t seed,
                                                 struct SipcondTrajectory **out);

// Number of samples, or 0 for a null handle.
size_t sipcond_trajectory_len(const struct SipcondTrajectory *traj);

// Number of sites, or 0 for a null handle.
size_t sipcond_trajectory_sites(const struct SipcondTrajectory *traj);

// Copies sample times into `times_out` (`len` entries) and states into
// `points_out` (`len × sites`, row-major). Either output may be null.
enum SipcondStatus sipcond_trajectory_copy(const struct SipcondTrajectory *traj,
                                           double *times_out,
                                           double *points_out);

void sipcond_trajectory_free(struct SipcondTrajectory *traj);

// Two-site moments `E[y(t)^n]`, `n = 0..=n_max`, from the dual ODE with
// coalescence scale `kappa`. Writes `n_times × (n_max + 1)` values row-major.
enum SipcondStatus sipcond_moment_dual_oracle(size_t n_max,
                                              double kappa,
                                              double y0,
                                              const double *times,
                                              size_t n_times,
                                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIPCOND_H */
