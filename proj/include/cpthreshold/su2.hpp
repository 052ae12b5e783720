#pragma once

#include <array>
#include <complex>
#include <span>

namespace cpt {

using Complex = std::complex<double>;

// 2x2 complex matrix stored row-major. The type does not enforce unitarity on
// construction (the Monte Carlo loop builds millions of these); use
// `checked()` when the entries come from outside.
class Unitary2 {
 public:
  Unitary2() : m_{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}} {}
  Unitary2(Complex a, Complex b, Complex c, Complex d) : m_{a, b, c, d} {}

  static Unitary2 identity() { return {}; }

  // Throws std::invalid_argument when the entries violate the unitarity or
  // |det| = 1 invariants (tolerance 1e-12).
  static Unitary2 checked(Complex a, Complex b, Complex c, Complex d);

  const Complex& operator()(int row, int col) const { return m_[2 * row + col]; }
  const std::array<Complex, 4>& entries() const { return m_; }

  Unitary2 adjoint() const;
  Complex trace() const { return m_[0] + m_[3]; }
  Complex determinant() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

  // Frobenius norm of U^dagger U - I.
  double unitarity_residual() const;
  bool is_unitary(double tol = 1e-12) const;

  friend Unitary2 operator*(const Unitary2& lhs, const Unitary2& rhs);
  friend Unitary2 operator*(Complex s, const Unitary2& u);

 private:
  std::array<Complex, 4> m_;
};

// Two-mode coupled-wave Hamiltonian [[detuning, coupling], [coupling, -detuning]].
struct Hamiltonian2 {
  double detuning = 0.0;  // 1/um
  double coupling = 0.0;  // 1/um
};

// (1/2) |Tr(ideal^dagger actual)|.
double gate_fidelity(const Unitary2& ideal, const Unitary2& actual);

// exp(-i H z) in closed form. Throws std::invalid_argument for z < 0.
Unitary2 evolve(const Hamiltonian2& h, double z);

// Ordered product; segments[0] acts first, so the result is
// segments[n-1] * ... * segments[0]. Throws std::invalid_argument when empty.
Unitary2 compose(std::span<const Unitary2> segments);

namespace gates {
Unitary2 pauli_x();
Unitary2 pauli_y();
Unitary2 pauli_z();
// 50:50 directional-coupler splitter, (1/sqrt2) [[1, -i], [-i, 1]].
Unitary2 balanced_splitter();
}  // namespace gates

}  // namespace cpt
