#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "cpthreshold/su2.hpp"
#include "doctest.h"

using namespace cpt;

namespace {

using M2 = std::array<Complex, 4>;

M2 mul(const M2& a, const M2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
          a[2] * b[1] + a[3] * b[3]};
}

// exp(A) by scaling and squaring with a truncated Taylor series.
M2 expm_oracle(M2 a) {
  double norm = 0.0;
  for (const auto& x : a) norm += std::norm(x);
  norm = std::sqrt(norm);
  int s = 0;
  while (norm > 0.01) {
    norm /= 2.0;
    ++s;
  }
  const double scale = std::ldexp(1.0, -s);
  for (auto& x : a) x *= scale;
  M2 result{1.0, 0.0, 0.0, 1.0}, term{1.0, 0.0, 0.0, 1.0};
  for (int k = 1; k <= 20; ++k) {
    term = mul(term, a);
    for (auto& x : term) x /= static_cast<double>(k);
    for (int i = 0; i < 4; ++i) result[i] += term[i];
  }
  for (int i = 0; i < s; ++i) result = mul(result, result);
  return result;
}

double max_diff(const Unitary2& u, const M2& m) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(u.entries()[i] - m[i]));
  return d;
}

double max_diff(const Unitary2& u, const Unitary2& v) { return max_diff(u, v.entries()); }

Unitary2 random_unitary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2.0, 2.0), z(0.0, 40.0);
  const double phase = d(rng);
  return Complex(std::cos(phase), std::sin(phase)) * evolve({d(rng), std::abs(d(rng))}, z(rng));
}

}  // namespace

TEST_SUITE("su2") {
  TEST_CASE("fidelity examples") {
    const auto x = gates::pauli_x();
    CHECK(gate_fidelity(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gate_fidelity(Unitary2::identity(), Complex(0, 1) * Unitary2::identity()) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gate_fidelity(Unitary2::identity(), x) == 0.0);
  }

  TEST_CASE("fidelity is phase invariant and symmetric") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const auto a = random_unitary(rng), b = random_unitary(rng);
    const double f = gate_fidelity(a, b);
    CHECK(gate_fidelity(b, a) == doctest::Approx(f).epsilon(1e-15));
    for (int k = 0; k < 100; ++k) {
      const double p = phase(rng);
      CHECK(std::abs(gate_fidelity(a, Complex(std::cos(p), std::sin(p)) * b) - f) <= 1e-14);
    }
  }

  TEST_CASE("evolve examples") {
    CHECK(max_diff(evolve({0.0, 0.3}, 0.0), Unitary2::identity()) == 0.0);
    CHECK(max_diff(evolve({0.0, 0.0}, 7.0), Unitary2::identity()) == 0.0);
    const double z0 = 25.5;
    const auto full = evolve({0.0, std::numbers::pi / (2.0 * z0)}, z0);
    CHECK(max_diff(full, M2{0.0, Complex(0, -1), Complex(0, -1), 0.0}) <= 1e-15);
    CHECK_THROWS_AS(evolve({0.1, 0.1}, -1.0), std::invalid_argument);
  }

  TEST_CASE("evolve matches the series exponential") {
    const double r2 = std::sqrt(2.0);
    const Complex c = std::cos(r2), s = Complex(0, -std::sin(r2) / r2);
    const M2 expected{c + s, s, s, c - s};
    CHECK(max_diff(evolve({1.0, 1.0}, 1.0), expected) <= 1e-12);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-1.0, 1.0), k(0.0, 1.0), z(0.0, 40.0);
    for (int t = 0; t < 200; ++t) {
      const Hamiltonian2 h{d(rng), k(rng)};
      const double len = z(rng);
      const Complex mi(0, -len);
      const M2 a{mi * h.detuning, mi * h.coupling, mi * h.coupling, -mi * h.detuning};
      const auto u = evolve(h, len);
      CHECK(max_diff(u, expm_oracle(a)) <= 1e-12);
      CHECK(u.unitarity_residual() <= 1e-12);
      CHECK(std::abs(std::abs(u.determinant()) - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("semigroup property") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-0.2, 0.2), z(0.0, 30.0);
    for (int t = 0; t < 100; ++t) {
      const Hamiltonian2 h{d(rng), std::abs(d(rng))};
      const double z1 = z(rng), z2 = z(rng);
      const std::vector<Unitary2> parts{evolve(h, z1), evolve(h, z2)};
      CHECK(max_diff(evolve(h, z1 + z2), compose(parts)) <= 1e-12);
    }
  }

  TEST_CASE("compose order") {
    CHECK_THROWS_AS(compose({}), std::invalid_argument);
    const std::vector<Unitary2> ids(3);
    CHECK(max_diff(compose(ids), Unitary2::identity()) == 0.0);

    std::mt19937_64 rng(31);
    const auto a = random_unitary(rng), b = random_unitary(rng);
    const std::vector<Unitary2> one{a};
    CHECK(max_diff(compose(one), a) == 0.0);

    // Apply A then B to each basis state.
    const auto ab = compose(std::vector<Unitary2>{a, b});
    for (int col = 0; col < 2; ++col) {
      const Complex v0 = a(0, col), v1 = a(1, col);
      const Complex w0 = b(0, 0) * v0 + b(0, 1) * v1;
      const Complex w1 = b(1, 0) * v0 + b(1, 1) * v1;
      CHECK(std::abs(ab(0, col) - w0) <= 1e-14);
      CHECK(std::abs(ab(1, col) - w1) <= 1e-14);
    }
    CHECK(ab.unitarity_residual() <= 1e-12);
  }

  TEST_CASE("checked rejects non-unitary entries") {
    CHECK_THROWS_AS(Unitary2::checked(1.0, 0.0, 0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(Unitary2::checked(1.0, 1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_NOTHROW(Unitary2::checked(0.0, 1.0, 1.0, 0.0));
    for (const auto& g : {gates::pauli_x(), gates::pauli_y(), gates::pauli_z(), gates::balanced_splitter()})
      CHECK(g.is_unitary());
  }
}
