#pragma once

#include <cstdint>
#include <vector>

#include "cpthreshold/coupler.hpp"
#include "cpthreshold/error_model.hpp"

namespace cpt {

struct McOptions {
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct FidelityStats {
  double mean = 0.0;
  double std = 0.0;
  double stderr_mean = 0.0;
  // Asymptotic std / sqrt(2 N); adequate for near-Gaussian fidelity spread.
  double stderr_std = 0.0;
  std::size_t samples = 0;   // requested
  std::size_t accepted = 0;  // samples - rejected
  std::uint64_t seed = 0;
  std::size_t rejected = 0;  // out-of-range perturbations

  // rejected / samples > 0.001
  bool unreliable() const;
};

// Common-random-number comparison of a composite solution against a uniform
// (single-segment) coupler. Both arms see the same error draw; the uniform
// arm takes the variables of segment 1.
struct PairedStats {
  FidelityStats cp;
  FidelityStats uniform;
  double mean_diff = 0.0;    // mean(F_cp - F_phy)
  double std_diff = 0.0;     // std of the per-sample difference
  double stderr_diff = 0.0;
  double std_gap = 0.0;      // cp.std - uniform.std
  double stderr_std_gap = 0.0;  // batch-means estimate
  std::size_t samples = 0;
  std::size_t rejected = 0;
  std::uint64_t seed = 0;

  // Per-batch means over the fixed sample partition (batch-means error
  // estimates for quantities derived from several correlated runs).
  std::vector<double> batch_mean_cp;
  std::vector<double> batch_mean_uniform;
  std::vector<std::size_t> batch_count;

  bool unreliable() const;
};

// Sample moments of gate_fidelity(sol.ideal, composite_unitary(sol, eps_k)).
// spec.n must equal sol.size(); spec.m selects width-only (2) or
// width-and-length (3) errors. Throws std::invalid_argument when
// samples < 100 or the spec does not match the solution.
FidelityStats fidelity_stats(const CompositeSolution& sol, const CorrelationSpec& spec,
                             CorrelationMode mode, const CouplerPhysics& phys, const McOptions& opts);

// spec.n must equal cp.size(); uniform must have exactly one segment.
PairedStats paired_fidelity_diff(const CompositeSolution& cp, const CompositeSolution& uniform,
                                 const CorrelationSpec& spec, CorrelationMode mode,
                                 const CouplerPhysics& phys, const McOptions& opts);

// Worker count from CP_THRESHOLD_WORKERS, or `fallback` when unset/invalid.
unsigned workers_from_env(unsigned fallback = 1);

}  // namespace cpt
