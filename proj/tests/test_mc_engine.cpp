#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "cpthreshold/mc_engine.hpp"
#include "cpthreshold/solution_io.hpp"
#include "doctest.h"

using namespace cpt;
namespace fs = std::filesystem;

namespace {

CompositeSolution table1() { return load_solution(fs::path(CPT_SOURCE_DIR) / "fixtures/table1_refined.json"); }

bool same(const FidelityStats& a, const FidelityStats& b) {
  return a.mean == b.mean && a.std == b.std && a.stderr_mean == b.stderr_mean && a.rejected == b.rejected;
}

}  // namespace

TEST_SUITE("mc_engine") {
  const CouplerPhysics phys;

  TEST_CASE("zero sigma returns the zero-error fidelity") {
    const auto sol = table1();
    const double f0 = gate_fidelity(sol.ideal, composite_unitary(sol, phys));
    const auto s = fidelity_stats(sol, {0.0, 0.5, 0.5, 3, 2}, CorrelationMode::general, phys, {500, 1, 1});
    CHECK(s.mean == doctest::Approx(f0).epsilon(1e-15));
    CHECK(s.std <= 1e-15);
    CHECK(s.samples == 500);
    CHECK(s.accepted == 500);
    CHECK_FALSE(s.unreliable());
  }

  TEST_CASE("preconditions") {
    const auto sol = table1();
    CHECK_THROWS_AS(fidelity_stats(sol, {0.005, 0.5, 0.5, 3, 2}, CorrelationMode::general, phys, {99, 1, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fidelity_stats(sol, {0.005, 0.5, 0.5, 2, 2}, CorrelationMode::general, phys, {500, 1, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        paired_fidelity_diff(sol, sol, {0.005, 0.5, 0.5, 3, 2}, CorrelationMode::general, phys, {500, 1, 1}),
        std::invalid_argument);
  }

  TEST_CASE("physical gate loses fidelity") {
    const auto uni = full_transfer_coupler(phys, 0.45);
    const auto s = fidelity_stats(uni, {0.00667, 1.0, 1.0, 1, 2}, CorrelationMode::segments, phys, {4000, 3, 1});
    CHECK(s.mean < 1.0);
    CHECK(s.stderr_mean == doctest::Approx(s.std / std::sqrt(4000.0)));
    CHECK(s.stderr_std == doctest::Approx(s.std / std::sqrt(8000.0)));
  }

  TEST_CASE("correlation helps the composite pulse") {
    const auto sol = table1();
    const McOptions mc{100000, 8, 1};
    const auto lo = fidelity_stats(sol, {0.00667, 0.0, 1.0, 3, 2}, CorrelationMode::segments, phys, mc);
    const auto hi = fidelity_stats(sol, {0.00667, 1.0, 1.0, 3, 2}, CorrelationMode::segments, phys, mc);
    const double z99 = 2.5758;
    CHECK(hi.mean - z99 * hi.stderr_mean > lo.mean + z99 * lo.stderr_mean);
  }

  TEST_CASE("results do not depend on the worker count") {
    const auto sol = table1();
    const auto uni = full_transfer_coupler(phys, 0.45);
    const CorrelationSpec spec{0.00667, 0.4, 0.8, 3, 2};
    const auto a = fidelity_stats(sol, spec, CorrelationMode::general, phys, {5000, 12, 1});
    for (unsigned w : {4u, 16u}) {
      const auto b = fidelity_stats(sol, spec, CorrelationMode::general, phys, {5000, 12, w});
      CHECK(same(a, b));
      const auto pa = paired_fidelity_diff(sol, uni, spec, CorrelationMode::general, phys, {5000, 12, 1});
      const auto pb = paired_fidelity_diff(sol, uni, spec, CorrelationMode::general, phys, {5000, 12, w});
      CHECK(pa.mean_diff == pb.mean_diff);
      CHECK(pa.stderr_std_gap == pb.stderr_std_gap);
      CHECK(pa.batch_mean_cp == pb.batch_mean_cp);
    }
  }

  TEST_CASE("paired difference") {
    const auto sol = table1();
    const auto uni = full_transfer_coupler(phys, 0.45);
    const CorrelationSpec spec{0.00667, 0.3, 1.0, 3, 2};

    auto self = full_transfer_coupler(phys, 0.45);
    const auto z = paired_fidelity_diff(self, uni, {0.00667, 0.3, 1.0, 1, 2}, CorrelationMode::segments, phys,
                                        {2000, 4, 1});
    CHECK(z.mean_diff == 0.0);
    CHECK(z.std_diff == 0.0);

    const auto zero = paired_fidelity_diff(sol, uni, {0.0, 0.3, 1.0, 3, 2}, CorrelationMode::segments, phys,
                                           {500, 4, 1});
    const double f_cp = gate_fidelity(sol.ideal, composite_unitary(sol, phys));
    const double f_u = gate_fidelity(uni.ideal, composite_unitary(uni, phys));
    CHECK(zero.mean_diff == doctest::Approx(f_cp - f_u).epsilon(1e-14));

    const auto p = paired_fidelity_diff(sol, uni, spec, CorrelationMode::segments, phys, {20000, 4, 1});
    CHECK(p.cp.mean - p.uniform.mean == doctest::Approx(p.mean_diff).epsilon(1e-12));
    CHECK(p.batch_mean_cp.size() == p.batch_count.size());
    // Independent streams for the two arms.
    const auto cp_alone = fidelity_stats(sol, spec, CorrelationMode::segments, phys, {20000, 4, 1});
    const auto u_alone = fidelity_stats(uni, {0.00667, 0.3, 1.0, 1, 2}, CorrelationMode::segments, phys, {20000, 5, 1});
    CHECK(cp_alone.mean == p.cp.mean);
    const double unpaired = std::sqrt(cp_alone.std * cp_alone.std + u_alone.std * u_alone.std);
    CHECK(p.std_diff < unpaired);
  }

  TEST_CASE("physical gate std to infidelity ratio") {
    const auto uni = full_transfer_coupler(phys, 0.45);
    for (double sigma : {0.002, 0.004, 0.00667}) {
      const auto s = fidelity_stats(uni, {sigma, 1.0, 1.0, 1, 2}, CorrelationMode::segments, phys, {200000, 21, 1});
      CHECK(s.std / (1.0 - s.mean) == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
    }
  }

  TEST_CASE("mean fidelity decreases with sigma at full correlation") {
    // The composite fixture is tuned for robustness, so its zero-error point
    // is not the fidelity maximum; its grid starts past that plateau.
    const auto sol = table1();
    const auto uni = full_transfer_coupler(phys, 0.45);
    auto check = [&](const CompositeSolution& s, std::initializer_list<double> grid) {
      double prev = 1.0, prev_se = 0.0;
      for (double sigma : grid) {
        const auto st =
            fidelity_stats(s, {sigma, 1.0, 1.0, s.size(), 2}, CorrelationMode::segments, phys, {20000, 6, 1});
        CHECK(st.mean <= prev + 2.5758 * std::hypot(st.stderr_mean, prev_se));
        prev = st.mean;
        prev_se = st.stderr_mean;
      }
    };
    check(uni, {0.001, 0.002, 0.004, 0.006, 0.008, 0.01});
    check(sol, {0.004, 0.006, 0.008, 0.01, 0.012});
  }

  TEST_CASE("rejected samples are counted") {
    auto sol = table1();
    for (auto& s : sol.segments) s.wa_um = s.wb_um = 0.005;
    const auto s = fidelity_stats(sol, {0.005, 0.0, 0.0, 3, 2}, CorrelationMode::general, phys, {1000, 2, 1});
    CHECK(s.rejected > 0);
    CHECK(s.accepted + s.rejected == s.samples);
    CHECK(s.unreliable());
  }

  TEST_CASE("worker count from the environment") {
    setenv("CP_THRESHOLD_WORKERS", "3", 1);
    CHECK(workers_from_env(1) == 3);
    setenv("CP_THRESHOLD_WORKERS", "abc", 1);
    CHECK(workers_from_env(2) == 2);
    unsetenv("CP_THRESHOLD_WORKERS");
    CHECK(workers_from_env(5) == 5);
  }
}
