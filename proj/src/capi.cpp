#include "cpthreshold/cpthreshold.h"

#include <cstring>
#include <exception>
#include <string>

#include "cpthreshold/errors.hpp"
#include "cpthreshold/mc_engine.hpp"
#include "cpthreshold/solution_io.hpp"
#include "cpthreshold/study.hpp"

struct cpt_study {
  cpt::StudyConfig config;
  cpt::StudyOutcome outcome;
};

struct cpt_solution {
  cpt::CompositeSolution sol;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

cpt_status fail(cpt_status s, const std::string& msg, const std::string& field = {}) {
  g_error = msg;
  g_field = field;
  return s;
}

template <class Fn>
cpt_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const cpt::ConfigError& e) {
    return fail(CPT_ERR_CONFIG, e.what(), e.field());
  } catch (const cpt::IoError& e) {
    return fail(CPT_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CPT_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(CPT_ERR_NUMERICAL, e.what());
  } catch (const std::exception& e) {
    return fail(CPT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CPT_ERR_INTERNAL, "unknown error");
  }
}

cpt::CouplerPhysics physics_from(const cpt_physics* p) {
  cpt::CouplerPhysics out;
  if (p) {
    out.beta1 = p->beta1;
    out.w_ref = p->w_ref;
    out.kappa0 = p->kappa0;
    out.eta = p->eta;
  }
  out.validate();
  return out;
}

}  // namespace

extern "C" {

const char* cpt_version(void) { return cpt::tool_version(); }
const char* cpt_last_error(void) { return g_error.c_str(); }
const char* cpt_last_error_field(void) { return g_field.c_str(); }

cpt_status cpt_study_load(const char* config_path, cpt_study** out) {
  if (!config_path || !out) return fail(CPT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto s = new cpt_study;
    try {
      s->config = cpt::load_study_config(config_path);
    } catch (...) {
      delete s;
      throw;
    }
    *out = s;
    return CPT_OK;
  });
}

cpt_status cpt_study_set_output_dir(cpt_study* study, const char* dir) {
  if (!study || !dir || !*dir) return fail(CPT_ERR_INVALID_ARGUMENT, "null or empty output directory");
  study->config.output_dir = dir;
  return CPT_OK;
}

cpt_status cpt_study_set_workers(cpt_study* study, unsigned workers) {
  if (!study || workers == 0) return fail(CPT_ERR_INVALID_ARGUMENT, "workers must be at least 1");
  study->config.workers = workers;
  return CPT_OK;
}

cpt_status cpt_study_set_seed(cpt_study* study, uint64_t seed) {
  if (!study) return fail(CPT_ERR_INVALID_ARGUMENT, "null study");
  study->config.seed = seed;
  study->config.optimizer.seed = seed;
  return CPT_OK;
}

cpt_status cpt_study_set_samples(cpt_study* study, uint64_t samples) {
  if (!study) return fail(CPT_ERR_INVALID_ARGUMENT, "null study");
  if (samples < 100) return fail(CPT_ERR_CONFIG, "samples must be at least 100", "--samples");
  study->config.samples = static_cast<std::size_t>(samples);
  return CPT_OK;
}

cpt_status cpt_study_run(cpt_study* study) {
  if (!study) return fail(CPT_ERR_INVALID_ARGUMENT, "null study");
  return guarded([&] {
    study->outcome = cpt::run_study(study->config);
    if (study->outcome.exit_code == cpt::kExitNumerical) {
      g_error = study->outcome.flags.empty() ? "flagged" : study->outcome.flags.front();
      g_field.clear();
      return CPT_ERR_NUMERICAL;
    }
    return CPT_OK;
  });
}

const char* cpt_study_summary(const cpt_study* study) { return study ? study->outcome.summary.c_str() : ""; }

size_t cpt_study_flag_count(const cpt_study* study) { return study ? study->outcome.flags.size() : 0; }

const char* cpt_study_flag(const cpt_study* study, size_t index) {
  if (!study || index >= study->outcome.flags.size()) return nullptr;
  return study->outcome.flags[index].c_str();
}

void cpt_study_free(cpt_study* study) { delete study; }

void cpt_physics_default(cpt_physics* out) {
  if (!out) return;
  const cpt::CouplerPhysics d;
  *out = {d.beta1, d.w_ref, d.kappa0, d.eta};
}

cpt_status cpt_solution_load(const char* path, cpt_solution** out) {
  if (!path || !out) return fail(CPT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto sol = cpt::load_solution(path);
    sol.validate();
    *out = new cpt_solution{std::move(sol)};
    return CPT_OK;
  });
}

size_t cpt_solution_segments(const cpt_solution* sol) { return sol ? sol->sol.size() : 0; }

cpt_status cpt_solution_id(const cpt_solution* sol, char* buf, size_t size) {
  if (!sol || !buf) return fail(CPT_ERR_INVALID_ARGUMENT, "null argument");
  const auto id = cpt::solution_id(sol->sol);
  if (size < id.size() + 1) return fail(CPT_ERR_INVALID_ARGUMENT, "buffer too small");
  std::memcpy(buf, id.c_str(), id.size() + 1);
  return CPT_OK;
}

void cpt_solution_free(cpt_solution* sol) { delete sol; }

cpt_status cpt_zero_error_fidelity(const cpt_solution* sol, const cpt_physics* phys, double* out) {
  if (!sol || !out) return fail(CPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto p = physics_from(phys);
    *out = cpt::gate_fidelity(sol->sol.ideal, cpt::composite_unitary(sol->sol, p));
    return CPT_OK;
  });
}

cpt_status cpt_fidelity_stats_run(const cpt_solution* sol, const cpt_physics* phys, cpt_mode mode, double sigma_um,
                                  double rho, double rho_bar, uint64_t samples, uint64_t seed, unsigned workers,
                                  cpt_fidelity_stats* out) {
  if (!sol || !out) return fail(CPT_ERR_INVALID_ARGUMENT, "null argument");
  if (mode < CPT_MODE_SEGMENTS || mode > CPT_MODE_GENERAL) return fail(CPT_ERR_INVALID_ARGUMENT, "unknown mode");
  return guarded([&] {
    const auto p = physics_from(phys);
    cpt::CorrelationSpec spec;
    spec.sigma_um = sigma_um;
    spec.rho = rho;
    spec.rho_bar = rho_bar;
    spec.n = sol->sol.size();
    const auto s = cpt::fidelity_stats(sol->sol, spec, static_cast<cpt::CorrelationMode>(mode), p,
                                       {static_cast<std::size_t>(samples), seed, workers == 0 ? 1u : workers});
    *out = {s.mean, s.std, s.stderr_mean, s.stderr_std, s.samples, s.rejected, s.seed, s.unreliable() ? 1 : 0};
    return CPT_OK;
  });
}

}  // extern "C"
