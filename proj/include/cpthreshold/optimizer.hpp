#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cpthreshold/coupler.hpp"

namespace cpt {

struct OptimizerConfig {
  std::size_t n_segments = 3;
  WidthBounds width_bounds{0.31, 0.49};
  double length_lo_um = 0.0;
  double length_hi_um = 32.0;
  double sigma_objective_um = 6.67e-3;
  std::size_t restarts = 8;
  std::uint64_t seed = 1;
  std::size_t max_evals = 6000;          // per restart
  std::size_t objective_samples = 256;
  unsigned workers = 1;

  void validate() const;  // throws ConfigError
};

// Mean fidelity under the segments model at rho = 1 with a fixed sample
// budget and seed; deterministic in its inputs.
double robust_objective(const CompositeSolution& sol, const CouplerPhysics& phys, double sigma_um,
                        std::size_t samples, std::uint64_t seed);

struct RestartRecord {
  CompositeSolution solution;
  double start_objective = 0.0;
  double objective = 0.0;
  double zero_error_fidelity = 0.0;
  std::size_t evaluations = 0;
  bool valid = false;  // zero-error fidelity >= 0.999
};

struct OptimizationResult {
  bool ok = false;
  std::string failure;  // set when ok == false
  CompositeSolution best;
  std::size_t best_restart = 0;
  double objective = 0.0;
  double zero_error_fidelity = 0.0;
  std::vector<RestartRecord> restarts;
};

// Multi-restart bounded Nelder-Mead over (wa, wb, z) per segment. The best
// valid restart wins (ties: lowest restart index). ok is false when no restart
// reaches zero-error fidelity 0.999.
OptimizationResult optimize_solution(const OptimizerConfig& cfg, const Unitary2& ideal,
                                     const CouplerPhysics& phys, const std::string& ideal_name = {});

// Single local search started from `start` (same objective and box as
// optimize_solution); start must have cfg.n_segments segments inside the box.
RestartRecord refine_solution(const CompositeSolution& start, const OptimizerConfig& cfg,
                              const CouplerPhysics& phys);

// Minimizes f over the unit cube [0,1]^d starting from x0. Points are
// projected onto the cube before every evaluation.
struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};
SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> x0, double initial_step, std::size_t max_evals,
                              double ftol = 1e-13);

}  // namespace cpt
