#include "cpthreshold/coupler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cpthreshold/errors.hpp"

namespace cpt {

namespace {

void require_positive_widths(double wa, double wb) {
  if (!(wa > 0.0) || !(wb > 0.0)) throw std::invalid_argument("waveguide widths must be positive");
}

Hamiltonian2 hamiltonian_for(double wa, double wb, const CouplerPhysics& p) {
  return {0.5 * p.beta1 * (wa - wb), p.kappa0 * std::exp(-p.eta * (0.5 * (wa + wb) - p.w_ref))};
}

}  // namespace

void CouplerPhysics::validate() const {
  if (!std::isfinite(beta1) || !std::isfinite(w_ref) || !std::isfinite(kappa0) || !std::isfinite(eta))
    throw ConfigError("coupler physics constants must be finite", "physics");
  if (!(kappa0 > 0.0)) throw ConfigError("kappa0 must be positive", "physics.kappa0");
}

void CompositeSolution::validate(const WidthBounds& bounds) const {
  if (segments.empty()) throw ConfigError("solution has no segments", "/segments");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const std::string where = "/segments/" + std::to_string(i);
    if (!(s.wa_um >= bounds.lo && s.wa_um <= bounds.hi))
      throw ConfigError("width wa outside fabrication bounds", where + "/wa_um");
    if (!(s.wb_um >= bounds.lo && s.wb_um <= bounds.hi))
      throw ConfigError("width wb outside fabrication bounds", where + "/wb_um");
    if (!(s.z_um >= 0.0) || !std::isfinite(s.z_um))
      throw ConfigError("segment length must be non-negative", where + "/z_um");
  }
  if (!ideal.is_unitary()) throw ConfigError("ideal gate is not unitary", "/ideal");
}

double detuning(double wa_um, double wb_um, const CouplerPhysics& phys) {
  require_positive_widths(wa_um, wb_um);
  return 0.5 * phys.beta1 * (wa_um - wb_um);
}

double coupling(double wa_um, double wb_um, const CouplerPhysics& phys) {
  require_positive_widths(wa_um, wb_um);
  return phys.kappa0 * std::exp(-phys.eta * (0.5 * (wa_um + wb_um) - phys.w_ref));
}

Unitary2 segment_unitary(const Segment& seg, const SegmentError& err, const CouplerPhysics& phys) {
  const double wa = seg.wa_um + err.dwa_um;
  const double wb = seg.wb_um + err.dwb_um;
  const double z = seg.z_um + err.dz_um;
  if (!(wa > 0.0) || !(wb > 0.0)) throw PerturbationOutOfRange("perturbed width is not positive");
  if (!(z >= 0.0)) throw PerturbationOutOfRange("perturbed length is negative");
  return evolve(hamiltonian_for(wa, wb, phys), z);
}

Unitary2 composite_unitary(const CompositeSolution& sol, std::span<const SegmentError> errors,
                           const CouplerPhysics& phys) {
  if (errors.size() != sol.segments.size())
    throw std::invalid_argument("error vector length " + std::to_string(errors.size()) +
                                " does not match segment count " +
                                std::to_string(sol.segments.size()));
  if (sol.segments.empty()) throw std::invalid_argument("solution has no segments");
  Unitary2 acc = segment_unitary(sol.segments[0], errors[0], phys);
  for (std::size_t i = 1; i < sol.segments.size(); ++i)
    acc = segment_unitary(sol.segments[i], errors[i], phys) * acc;
  return acc;
}

Unitary2 composite_unitary(const CompositeSolution& sol, const CouplerPhysics& phys) {
  std::vector<SegmentError> zero(sol.segments.size());
  return composite_unitary(sol, zero, phys);
}

std::optional<Unitary2> try_composite_unitary(const CompositeSolution& sol,
                                              std::span<const double> flat, std::size_t stride,
                                              const CouplerPhysics& phys) {
  const std::size_t n = sol.segments.size();
  if (stride != 2 && stride != 3) throw std::invalid_argument("error stride must be 2 or 3");
  if (flat.size() < n * stride) throw std::invalid_argument("flat error vector too short");
  Unitary2 acc;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sol.segments[i];
    const double wa = s.wa_um + flat[i * stride];
    const double wb = s.wb_um + flat[i * stride + 1];
    const double z = stride == 3 ? s.z_um + flat[i * stride + 2] : s.z_um;
    if (!(wa > 0.0) || !(wb > 0.0) || !(z >= 0.0)) return std::nullopt;
    const Unitary2 u = evolve(hamiltonian_for(wa, wb, phys), z);
    acc = i == 0 ? u : u * acc;
  }
  return acc;
}

CompositeSolution full_transfer_coupler(const CouplerPhysics& phys, double width_um) {
  const double k = coupling(width_um, width_um, phys);
  CompositeSolution sol;
  sol.segments.push_back({width_um, width_um, std::numbers::pi / (2.0 * k)});
  sol.ideal = gates::pauli_x();
  sol.ideal_name = "X";
  return sol;
}

}  // namespace cpt
