/* C interface to the cpthreshold library.
 *
 * Every function returns a cpt_status. On failure a message (and, for
 * configuration errors, the offending field) is available from
 * cpt_last_error() / cpt_last_error_field() on the calling thread until the
 * next failing call. Handles are opaque and owned by the caller.
 */
#ifndef CPTHRESHOLD_H
#define CPTHRESHOLD_H

#include <stddef.h>
#include <stdint.h>

#if defined(CPT_BUILDING_LIBRARY)
#define CPT_API __attribute__((visibility("default")))
#else
#define CPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cpt_status {
  CPT_OK = 0,
  CPT_ERR_CONFIG = 2,
  CPT_ERR_NUMERICAL = 3, /* results written but flagged */
  CPT_ERR_IO = 4,
  CPT_ERR_INVALID_ARGUMENT = 5,
  CPT_ERR_INTERNAL = 6
} cpt_status;

typedef enum cpt_mode { CPT_MODE_SEGMENTS = 0, CPT_MODE_WAVEGUIDES = 1, CPT_MODE_GENERAL = 2 } cpt_mode;

typedef struct cpt_study cpt_study;
typedef struct cpt_solution cpt_solution;

typedef struct cpt_physics {
  double beta1;  /* 1/um per um */
  double w_ref;  /* um */
  double kappa0; /* 1/um */
  double eta;    /* 1/um */
} cpt_physics;

typedef struct cpt_fidelity_stats {
  double mean;
  double std;
  double stderr_mean;
  double stderr_std;
  uint64_t samples;
  uint64_t rejected;
  uint64_t seed;
  int unreliable;
} cpt_fidelity_stats;

CPT_API const char* cpt_version(void);
CPT_API const char* cpt_last_error(void);
CPT_API const char* cpt_last_error_field(void);

/* Studies */
CPT_API cpt_status cpt_study_load(const char* config_path, cpt_study** out);
CPT_API cpt_status cpt_study_set_output_dir(cpt_study* study, const char* dir);
CPT_API cpt_status cpt_study_set_workers(cpt_study* study, unsigned workers);
CPT_API cpt_status cpt_study_set_seed(cpt_study* study, uint64_t seed);
CPT_API cpt_status cpt_study_set_samples(cpt_study* study, uint64_t samples);
/* CPT_OK or CPT_ERR_NUMERICAL when outputs were written. */
CPT_API cpt_status cpt_study_run(cpt_study* study);
CPT_API const char* cpt_study_summary(const cpt_study* study);
CPT_API size_t cpt_study_flag_count(const cpt_study* study);
CPT_API const char* cpt_study_flag(const cpt_study* study, size_t index);
CPT_API void cpt_study_free(cpt_study* study);

/* Solutions and direct Monte Carlo */
CPT_API void cpt_physics_default(cpt_physics* out);
CPT_API cpt_status cpt_solution_load(const char* path, cpt_solution** out);
CPT_API size_t cpt_solution_segments(const cpt_solution* sol);
CPT_API cpt_status cpt_solution_id(const cpt_solution* sol, char* buf, size_t size);
CPT_API void cpt_solution_free(cpt_solution* sol);
CPT_API cpt_status cpt_zero_error_fidelity(const cpt_solution* sol, const cpt_physics* phys, double* out);
CPT_API cpt_status cpt_fidelity_stats_run(const cpt_solution* sol, const cpt_physics* phys, cpt_mode mode,
                                          double sigma_um, double rho, double rho_bar, uint64_t samples,
                                          uint64_t seed, unsigned workers, cpt_fidelity_stats* out);

#ifdef __cplusplus
}
#endif

#endif
