// Acceptance runner: one PASS/FAIL line per primary criterion.
//
//   cpthreshold_acceptance [--out DIR] [--samples N] [--workers W] [--only 1,3,...]
//
// Study outputs stay in DIR (default ./acceptance_out) for the plotting tools.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cpthreshold/coupler.hpp"
#include "cpthreshold/error_model.hpp"
#include "cpthreshold/mc_engine.hpp"
#include "cpthreshold/solution_io.hpp"
#include "cpthreshold/study.hpp"
#include "cpthreshold/study_config.hpp"
#include "cpthreshold/su2.hpp"
#include "cpthreshold/threshold.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cpt;

namespace {

// Pinned tolerances.
constexpr double kAlgebraTol = 1e-12;
constexpr double kSigmaSpreadMax = 0.03;     // criterion 3
constexpr double kScalingR2Min = 0.9;        // criterion 6
constexpr double kRatioTol = 0.05;           // criterion 8, relative to sqrt(2)
constexpr double kSmallMaxResidual = 0.01;   // criterion 9, fraction of the unit rho range
constexpr double kSmallMeanResidual = 0.005;
constexpr double kLargeMaxResidual = 0.02;
constexpr double kLargeMeanResidual = 0.01;
constexpr double kStdErrors = 5.0;           // criterion 2

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Runner {
  fs::path out;
  fs::path configs;
  std::size_t samples = 200000;
  unsigned workers = 1;

  StudyConfig config(const std::string& name, const std::string& dir, bool keep_samples = false) const {
    auto c = load_study_config(configs / name);
    if (!keep_samples) c.samples = samples;
    c.workers = workers;
    c.output_dir = out / dir;
    return c;
  }

  json run(StudyConfig c) const {
    const auto t0 = std::chrono::steady_clock::now();
    const auto o = run_study(c);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << fmt::format("  [{:.1f}s] {}\n", s, o.summary);
    return o.results;
  }
};

double half_width(const json& r) { return 0.5 * (r["ci"][1].get<double>() - r["ci"][0].get<double>()); }

// Two estimates agree when their gap is inside the joint 95% half-width.
bool agree(const json& a, const json& b, double* gap = nullptr, double* joint = nullptr) {
  const double g = std::abs(a["rho_c"].get<double>() - b["rho_c"].get<double>());
  const double j = std::hypot(half_width(a), half_width(b));
  if (gap) *gap = g;
  if (joint) *joint = j;
  return g <= j;
}

std::string interval(const json& r) {
  if (r.is_null() || r["rho_c"].is_null()) return "n/a";
  return fmt::format("{:.4f} [{:.4f}, {:.4f}]", r["rho_c"].get<double>(), r["ci"][0].get<double>(),
                     r["ci"][1].get<double>());
}

// ---- criterion 1 ----------------------------------------------------------

using M2 = std::array<Complex, 4>;

M2 mul(const M2& a, const M2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
          a[2] * b[1] + a[3] * b[3]};
}

M2 expm_taylor(M2 a) {
  double norm = 0.0;
  for (const auto& x : a) norm += std::norm(x);
  norm = std::sqrt(norm);
  int s = 0;
  for (; norm > 0.01; ++s) norm /= 2.0;
  for (auto& x : a) x *= std::ldexp(1.0, -s);
  M2 r{1.0, 0.0, 0.0, 1.0}, t{1.0, 0.0, 0.0, 1.0};
  for (int k = 1; k <= 20; ++k) {
    t = mul(t, a);
    for (auto& x : t) x /= double(k);
    for (int i = 0; i < 4; ++i) r[i] += t[i];
  }
  for (int i = 0; i < s; ++i) r = mul(r, r);
  return r;
}

double dist(const Unitary2& u, const Unitary2& v) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(u.entries()[i] - v.entries()[i]));
  return d;
}

Outcome algebra() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> h(-0.5, 0.5), zd(0.0, 40.0), ph(0.0, 2.0 * M_PI);
  double unit = 0.0, phase = 0.0, semi = 0.0, oracle = 0.0;
  const Complex i1{0.0, 1.0};
  for (int t = 0; t < 500; ++t) {
    const Hamiltonian2 ham{h(rng), h(rng)};
    const double z1 = zd(rng), z2 = zd(rng);
    const auto u = evolve(ham, z1);
    unit = std::max({unit, u.unitarity_residual(), std::abs(std::abs(u.determinant()) - 1.0)});
    const auto v = evolve(Hamiltonian2{h(rng), h(rng)}, z2);
    const Complex p = std::exp(i1 * ph(rng));
    phase = std::max({phase, std::abs(gate_fidelity(u, p * v) - gate_fidelity(u, v)),
                      std::abs(gate_fidelity(p * u, v) - gate_fidelity(u, v))});
    semi = std::max(semi, dist(evolve(ham, z1 + z2), evolve(ham, z2) * evolve(ham, z1)));
    const M2 gen{-i1 * ham.detuning * z1, -i1 * ham.coupling * z1, -i1 * ham.coupling * z1,
                 i1 * ham.detuning * z1};
    const M2 e = expm_taylor(gen);
    oracle = std::max(oracle, dist(u, Unitary2(e[0], e[1], e[2], e[3])));
  }
  const bool pass = unit <= kAlgebraTol && phase <= kAlgebraTol && semi <= kAlgebraTol && oracle <= kAlgebraTol;
  return {pass, fmt::format("unitarity {:.1e}, phase {:.1e}, semigroup {:.1e}, exp-vs-oracle {:.1e} (tol {:.0e})",
                            unit, phase, semi, oracle, kAlgebraTol)};
}

// ---- criterion 2 ----------------------------------------------------------

Outcome covariance() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> nd(1, 6), md(1, 3), modes(0, 2);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const CorrelationSpec spec{0.001 + 0.01 * u(rng), u(rng), u(rng), std::size_t(nd(rng)), std::size_t(md(rng))};
    const auto mode = static_cast<CorrelationMode>(modes(rng));
    const double rs = mode == CorrelationMode::waveguides ? 1.0 : spec.rho;
    const double rv = mode == CorrelationMode::segments ? 1.0 : spec.rho_bar;
    const auto cov = build_covariance(spec, mode);
    for (std::size_t i = 0; i < spec.n; ++i)
      for (std::size_t a = 0; a < spec.m; ++a)
        for (std::size_t j = 0; j < spec.n; ++j)
          for (std::size_t b = 0; b < spec.m; ++b) {
            const double dij = i == j, dab = a == b;
            const double ref = spec.sigma_um * spec.sigma_um *
                               (dij * dab + rs * (1 - dij) * dab + rv * dij * (1 - dab) + rs * rv * (1 - dij) * (1 - dab));
            worst = std::max(worst, std::abs(cov.entries(i * spec.m + a, j * spec.m + b) - ref) /
                                        (spec.sigma_um * spec.sigma_um));
          }
  }

  const double sigma = 0.00667;
  const auto cov = build_covariance({sigma, 0.4, 0.7, 3, 2}, CorrelationMode::general);
  const std::size_t count = 100000;
  const auto xs = sample_errors(cov, count, 303);
  const auto d = cov.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& v : xs) {
    const Eigen::Map<const Eigen::VectorXd> x(v.data(), d);
    sum += x * x.transpose();
  }
  double z = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = cov.entries(i, j);
      const double se = std::sqrt((cov.entries(i, i) * cov.entries(j, j) + c * c) / double(count));
      z = std::max(z, std::abs(sum(i, j) / double(count) - c) / se);
    }
  return {worst <= kAlgebraTol && z <= kStdErrors,
          fmt::format("50 specs max relative entry error {:.1e}; empirical covariance worst {:.2f} se at 1e5 samples",
                      worst, z)};
}

// ---- criteria 3-5 ---------------------------------------------------------

Outcome sigma_independence(const Runner& r) {
  std::vector<double> rc;
  std::string detail;
  for (double s : {0.003, 0.005, 0.00667}) {
    auto c = r.config("sweep_rho_table1.ini", fmt::format("c03_sigma{}nm", s * 1000));
    c.sigma_um = s;
    c.tol = 0.005;
    const auto res = r.run(c);
    rc.push_back(res["rho_c"]["rho_c"].get<double>());
    detail += fmt::format("{}{}nm: {}", detail.empty() ? "" : "; ", s * 1000, interval(res["rho_c"]));
  }
  const double spread = *std::max_element(rc.begin(), rc.end()) - *std::min_element(rc.begin(), rc.end());
  return {spread <= kSigmaSpreadMax, fmt::format("spread {:.4f} (max {}); {}", spread, kSigmaSpreadMax, detail)};
}

struct Fixture {
  std::string file;
  json segments, waveguides;
};

std::vector<Fixture> coefficient_runs(const Runner& r) {
  std::vector<Fixture> f{
      {"table1_refined.json"}, {"table2_row1_refined.json"}, {"optimized_n4.json"}, {"optimized_n5.json"}};
  for (auto& x : f) {
    const auto stem = fs::path(x.file).stem().string();
    for (const char* mode : {"segments", "waveguides"}) {
      auto c = r.config(std::string("coefficients_table1_") + mode + ".ini", "c04_" + stem + "_" + mode);
      c.solution_path = r.configs.parent_path() / x.file;
      (std::string(mode) == "segments" ? x.segments : x.waveguides) = r.run(c);
    }
  }
  return f;
}

Outcome closed_vs_empirical(const std::vector<Fixture>& fx) {
  std::size_t agreeing = 0;
  std::string detail;
  for (const auto& f : fx) {
    bool ok = true;
    for (const auto* res : {&f.segments, &f.waveguides}) {
      double gap = 0.0, joint = 0.0;
      const bool a = !(*res)["rho_c"].is_null() && agree((*res)["rho_c"], (*res)["rho_c_empirical"], &gap, &joint);
      ok = ok && a && !(*res)["coefficients"]["contaminated"].get<bool>();
      detail += fmt::format("{}{} {}: closed {} vs bisection {} gap {:.4f} joint {:.4f}", detail.empty() ? "" : "; ",
                            fs::path(f.file).stem().string(), (*res)["coefficients"]["mode"].get<std::string>(),
                            interval((*res)["rho_c"]), interval((*res)["rho_c_empirical"]), gap, joint);
    }
    agreeing += ok;
  }
  return {agreeing >= 3, fmt::format("{} of {} fixtures agree in both modes; {}", agreeing, fx.size(), detail)};
}

Outcome ordering(const std::vector<Fixture>& fx) {
  const auto& f = fx.front();
  const auto& s = f.segments["rho_c"];
  const auto& w = f.waveguides["rho_c"];
  const bool pass = w["ci"][0].get<double>() > s["ci"][1].get<double>();
  return {pass, fmt::format("table1_refined waveguides {} vs segments {}", interval(w), interval(s))};
}

// ---- criteria 6-7 ---------------------------------------------------------

Outcome scaling(const json& res) {
  std::string detail;
  for (const auto& e : res["per_n"])
    detail += fmt::format("n={} min rho_c={}; ", e["n_segments"].get<int>(),
                          e["min_rho_c"].is_null() ? "n/a" : fmt::format("{:.4f}", e["min_rho_c"].get<double>()));
  const auto& fit = res["fit_mean"];
  if (fit.contains("error")) return {false, detail + "fit: " + fit["error"].get<std::string>()};
  const double r2 = fit["r_squared"].is_null() ? std::nan("") : fit["r_squared"].get<double>();
  return {r2 >= kScalingR2Min && fit["a"].get<double>() > 0.0, detail + fmt::format("a/n fit a={:.4f} r2={:.4f} (min {})", fit["a"].get<double>(), r2,
                                                     kScalingR2Min)};
}

Outcome n_independence(const json& res) {
  json r3, r5;
  for (const auto& e : res["per_n"]) {
    if (e["n_segments"] == 3) r3 = e.value("rho_c_waveguides", json());
    if (e["n_segments"] == 5) r5 = e.value("rho_c_waveguides", json());
  }
  if (r3.is_null() || r5.is_null() || r3.contains("error") || r5.contains("error"))
    return {false, "waveguides threshold unavailable for n=3 or n=5"};
  double gap = 0.0, joint = 0.0;
  const bool pass = agree(r3, r5, &gap, &joint);
  return {pass, fmt::format("n=3 {} vs n=5 {}: gap {:.4f} joint {:.4f}", interval(r3), interval(r5), gap, joint)};
}

// ---- criterion 8 ----------------------------------------------------------

Outcome variance_chain(const Runner& r) {
  const auto res = r.run(r.config("variance_table1.ini", "c08_variance"));
  std::size_t better = 0, bad = 0;
  std::map<double, double> ratio;
  std::string where;
  for (const auto& c : res["checks"]) {
    if (!c["cp_better"].get<bool>()) continue;
    ++better;
    if (c["bound_holds"].get<bool>() && c["std_holds"].get<bool>()) continue;
    ++bad;
    const auto& cp = c["paired"]["cp"];
    where += fmt::format(" [sigma {}nm rho {}: std_cp {:.2e}, sqrt2(1-mean_cp) {:.2e}, std_phy {:.2e}]",
                         c["sigma_um"].get<double>() * 1000, c["rho"].get<double>(), cp["std"].get<double>(),
                         std::sqrt(2.0) * (1.0 - cp["mean"].get<double>()),
                         c["paired"]["uniform"]["std"].get<double>());
  }
  for (const auto& c : res["checks"])
    if (!c["uniform_ratio"].is_null()) ratio[c["sigma_um"].get<double>()] = c["uniform_ratio"].get<double>();
  double worst = 0.0;
  std::string rs;
  for (const auto& [s, q] : ratio) {
    if (s > 0.00667 + 1e-12) continue;
    worst = std::max(worst, std::abs(q / std::sqrt(2.0) - 1.0));
    rs += fmt::format(" {}nm:{:.4f}", s * 1000, q);
  }
  const bool pass = res["checks"].size() == 15 && better > 0 && bad == 0 && !ratio.empty() && worst <= kRatioTol;
  return {pass, fmt::format("{} grid points, {} with mean_cp >= mean_phy, {} violations{}; std/(1-mean) uniform{} "
                            "(max deviation {:.2f}% of sqrt2, tol {}%)",
                            res["checks"].size(), better, bad, where, rs, 100 * worst, 100 * kRatioTol)};
}

// ---- criterion 9 ----------------------------------------------------------

Outcome curves(const Runner& r) {
  const auto small = r.run(r.config("curve_table1_small_sigma.ini", "c09_small_sigma"));
  const auto large = r.run(r.config("curve_table1_large_sigma.ini", "c09_large_sigma"));
  const auto& b = small["curve_fit"]["bilinear"];
  const auto& p = large["curve_fit"]["polynomial"];
  if (b.contains("error") || p.contains("error")) return {false, "curve fit failed"};
  const double bm = b["max_residual"].get<double>(), ba = b["mean_residual"].get<double>();
  const double pm = p["max_residual"].get<double>(), pa = p["mean_residual"].get<double>();
  const bool pass = bm <= kSmallMaxResidual && ba <= kSmallMeanResidual && pm <= kLargeMaxResidual &&
                    pa <= kLargeMeanResidual && p["degree"] == 3;
  return {pass, fmt::format("sigma 6.67nm bilinear max {:.2e} mean {:.2e}; sigma 26.67nm cubic max {:.2e} mean {:.2e}",
                            bm, ba, pm, pa)};
}

// ---- criterion 10 ---------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

Outcome determinism(const Runner& r) {
  std::size_t compared = 0;
  std::vector<std::string> diffs;
  for (const char* name : {"sweep_rho_table1.ini", "coefficients_table1_segments.ini"}) {
    std::vector<std::map<std::string, std::string>> trees;
    for (unsigned w : {1u, 4u}) {
      auto c = r.config(name, fmt::format("c10_{}_w{}", fs::path(name).stem().string(), w));
      c.workers = w;
      r.run(c);
      trees.push_back(tree(c.output_dir));
    }
    if (trees[0].size() != trees[1].size()) diffs.push_back(std::string(name) + ": file sets differ");
    for (const auto& [file, text] : trees[0]) {
      ++compared;
      const auto it = trees[1].find(file);
      if (it == trees[1].end() || it->second != text) diffs.push_back(std::string(name) + ":" + file);
    }
  }
  return {diffs.empty() && compared > 0,
          fmt::format("{} files compared between 1 and 4 workers, {} differ", compared, diffs.size())};
}

// ---- criterion 11 ---------------------------------------------------------

double g_oracle(const Eigen::MatrixXd& b, double rho) {
  const auto n = b.rows();
  auto w = [&](Eigen::Index i, Eigen::Index j) { return i == j ? 1.0 : rho; };
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      den += b(i, j) * w(j, i);
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) num += b(i, j) * w(j, k) * b(k, l) * w(l, i);
    }
  return std::sqrt(num) / std::abs(den);
}

Outcome g_properties() {
  std::mt19937_64 rng(1111);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 8);
  bool exact_one = true, in_range = true;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = dim(rng);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
    const Eigen::MatrixXd b = -(a * a.transpose());
    const double rho = u(rng);
    const double g = g_factor(b, rho);
    in_range = in_range && g >= 0.0 && g <= 1.0;
    worst = std::max(worst, std::abs(g - g_oracle(b, rho)));
    exact_one = exact_one && g_factor(b, 1.0) == 1.0;
  }
  return {exact_one && in_range && worst <= 1e-10,
          fmt::format("G(1) == 1 {}; G in [0,1] {}; max |G - oracle| {:.1e} over 200 draws", exact_one ? "yes" : "no",
                      in_range ? "yes" : "no", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Runner r;
  std::string out = "acceptance_out";
  std::vector<int> only;
  r.workers = workers_from_env(1);
  app.add_option("--out", out, "Output directory for study results");
  app.add_option("--samples", r.samples, "Monte Carlo samples per point")->check(CLI::Range(1000, 100000000));
  app.add_option("--workers", r.workers, "Worker threads")->check(CLI::Range(1, 256));
  app.add_option("--only", only, "Criteria to run")->delimiter(',')->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);
  r.out = fs::absolute(out);
  r.configs = fs::path(CPT_SOURCE_DIR) / "fixtures" / "configs";
  fs::create_directories(r.out);

  const std::set<int> chosen(only.begin(), only.end());
  auto want = [&](int k) { return chosen.empty() || chosen.count(k) > 0; };

  std::vector<Fixture> fixtures;
  json scaling_result;
  auto need_fixtures = [&] {
    if (fixtures.empty()) fixtures = coefficient_runs(r);
    return fixtures;
  };
  auto need_scaling = [&] {
    if (scaling_result.is_null()) scaling_result = r.run(r.config("scaling_n.ini", "c06_scaling", true));
    return scaling_result;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fidelity/algebra invariants", algebra},
      {"covariance oracle and sampler", covariance},
      {"sigma-independence of rho_c", [&] { return sigma_independence(r); }},
      {"closed form vs bisection", [&] { return closed_vs_empirical(need_fixtures()); }},
      {"waveguides rho_c above segments rho_c", [&] { return ordering(need_fixtures()); }},
      {"min rho_c scales as a/n", [&] { return scaling(need_scaling()); }},
      {"n-independence in waveguides mode", [&] { return n_independence(need_scaling()); }},
      {"variance theorem chain", [&] { return variance_chain(r); }},
      {"critical-curve fits", [&] { return curves(r); }},
      {"worker-count determinism", [&] { return determinism(r); }},
      {"G(rho) properties", g_properties},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!want(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("criterion {:2d} {} {}: {}", id, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
