#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpthreshold/su2.hpp"

namespace cpt {

// Leading-order coupled-mode model of a two-waveguide directional coupler.
//   detuning  = (beta1 / 2) * (wa - wb)
//   coupling  = kappa0 * exp(-eta * ((wa + wb) / 2 - w_ref))
struct CouplerPhysics {
  double beta1 = 3.0;     // 1/um per um of width difference
  double w_ref = 0.45;    // um
  double kappa0 = 0.0615; // 1/um
  double eta = 5.0;       // 1/um

  void validate() const;  // throws ConfigError
};

struct WidthBounds {
  double lo = 0.31;  // um
  double hi = 0.49;  // um
};

struct Segment {
  double wa_um = 0.0;
  double wb_um = 0.0;
  double z_um = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct CompositeSolution {
  std::vector<Segment> segments;
  Unitary2 ideal;
  // Gate name when the target is a named gate ("X", "I", "BS50", ...); empty
  // for explicit matrices.
  std::string ideal_name;

  std::size_t size() const { return segments.size(); }
  // Throws ConfigError when empty, a segment leaves `bounds`, a length is
  // negative, or the ideal gate is not unitary.
  void validate(const WidthBounds& bounds = {}) const;
};

// Per-segment error. `dz_um` is only consulted when length errors are enabled.
struct SegmentError {
  double dwa_um = 0.0;
  double dwb_um = 0.0;
  double dz_um = 0.0;
};

double detuning(double wa_um, double wb_um, const CouplerPhysics& phys);
double coupling(double wa_um, double wb_um, const CouplerPhysics& phys);

// Throws PerturbationOutOfRange when a perturbed width is not positive or the
// perturbed length is negative.
Unitary2 segment_unitary(const Segment& seg, const SegmentError& err, const CouplerPhysics& phys);

// Errors are one entry per segment. Throws std::invalid_argument on a length
// mismatch.
Unitary2 composite_unitary(const CompositeSolution& sol, std::span<const SegmentError> errors,
                           const CouplerPhysics& phys);
Unitary2 composite_unitary(const CompositeSolution& sol, const CouplerPhysics& phys);

// Flat error layout used by the sampler: `stride` variables per segment,
// ordered (dwa, dwb[, dz]). stride must be 2 or 3. Returns nullopt instead of
// throwing when a perturbation leaves the physical range.
std::optional<Unitary2> try_composite_unitary(const CompositeSolution& sol,
                                              std::span<const double> flat_errors,
                                              std::size_t stride, const CouplerPhysics& phys);

// Symmetric coupler at w_ref whose length is one complete coupling length;
// realizes -iX exactly in the absence of errors.
CompositeSolution full_transfer_coupler(const CouplerPhysics& phys, double width_um);

}  // namespace cpt
