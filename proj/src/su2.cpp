#include "cpthreshold/su2.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cpt {

Unitary2 Unitary2::checked(Complex a, Complex b, Complex c, Complex d) {
  Unitary2 u{a, b, c, d};
  const double res = u.unitarity_residual();
  if (!(res <= 1e-12))
    throw std::invalid_argument("matrix is not unitary (residual " + std::to_string(res) + ")");
  const double det_err = std::abs(std::abs(u.determinant()) - 1.0);
  if (!(det_err <= 1e-12))
    throw std::invalid_argument("matrix determinant modulus differs from 1");
  return u;
}

Unitary2 Unitary2::adjoint() const {
  return {std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])};
}

double Unitary2::unitarity_residual() const {
  const Unitary2 p = adjoint() * (*this);
  const double d00 = std::norm(p.m_[0] - 1.0);
  const double d11 = std::norm(p.m_[3] - 1.0);
  return std::sqrt(d00 + d11 + std::norm(p.m_[1]) + std::norm(p.m_[2]));
}

bool Unitary2::is_unitary(double tol) const {
  return unitarity_residual() <= tol && std::abs(std::abs(determinant()) - 1.0) <= tol;
}

Unitary2 operator*(const Unitary2& l, const Unitary2& r) {
  const auto& a = l.m_;
  const auto& b = r.m_;
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Unitary2 operator*(Complex s, const Unitary2& u) {
  return {s * u.m_[0], s * u.m_[1], s * u.m_[2], s * u.m_[3]};
}

double gate_fidelity(const Unitary2& ideal, const Unitary2& actual) {
  // Tr(A^dagger B) = sum_ij conj(A_ij) B_ij
  Complex tr{0.0};
  for (int k = 0; k < 4; ++k) tr += std::conj(ideal.entries()[k]) * actual.entries()[k];
  return 0.5 * std::abs(tr);
}

Unitary2 evolve(const Hamiltonian2& h, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("propagation length must be non-negative");
  const double omega = std::hypot(h.detuning, h.coupling);
  const double phase = omega * z;
  if (omega == 0.0 || phase == 0.0) return Unitary2::identity();
  const double c = std::cos(phase);
  const double s = std::sin(phase) / omega;
  const Complex mi{0.0, -1.0};
  return {Complex{c} + mi * (s * h.detuning), mi * (s * h.coupling),
          mi * (s * h.coupling), Complex{c} - mi * (s * h.detuning)};
}

Unitary2 compose(std::span<const Unitary2> segments) {
  if (segments.empty()) throw std::invalid_argument("cannot compose an empty segment list");
  Unitary2 acc = segments.front();
  for (std::size_t i = 1; i < segments.size(); ++i) acc = segments[i] * acc;
  return acc;
}

namespace gates {
Unitary2 pauli_x() { return {0.0, 1.0, 1.0, 0.0}; }
Unitary2 pauli_y() { return {0.0, Complex{0.0, -1.0}, Complex{0.0, 1.0}, 0.0}; }
Unitary2 pauli_z() { return {1.0, 0.0, 0.0, -1.0}; }
Unitary2 balanced_splitter() {
  const double r = 1.0 / std::sqrt(2.0);
  return {r, Complex{0.0, -r}, Complex{0.0, -r}, r};
}
}  // namespace gates

}  // namespace cpt
