#include "cpthreshold/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "cpthreshold/errors.hpp"
#include "cpthreshold/mc_engine.hpp"
#include "cpthreshold/rng.hpp"

namespace cpt {

void OptimizerConfig::validate() const {
  if (n_segments < 1) throw ConfigError("n_segments must be at least 1", "optimizer.n_segments");
  if (!(width_bounds.lo > 0.0 && width_bounds.lo < width_bounds.hi))
    throw ConfigError("width bounds must satisfy 0 < lo < hi", "optimizer.width_bounds");
  if (!(length_lo_um >= 0.0 && length_lo_um < length_hi_um))
    throw ConfigError("length bounds must satisfy 0 <= lo < hi", "optimizer.length_bounds");
  if (restarts < 1) throw ConfigError("restarts must be at least 1", "optimizer.restarts");
  if (!(sigma_objective_um > 0.0)) throw ConfigError("sigma_objective must be positive", "optimizer.sigma_um");
  if (objective_samples < 100) throw ConfigError("objective_samples must be at least 100", "optimizer.objective_samples");
  if (max_evals < 10) throw ConfigError("max_evals too small", "optimizer.max_evals");
}

double robust_objective(const CompositeSolution& sol, const CouplerPhysics& phys, double sigma_um,
                        std::size_t samples, std::uint64_t seed) {
  CorrelationSpec spec;
  spec.sigma_um = sigma_um;
  spec.rho = 1.0;
  spec.rho_bar = 1.0;
  spec.n = sol.size();
  return fidelity_stats(sol, spec, CorrelationMode::segments, phys, {samples, seed, 1}).mean;
}

SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> x0, double initial_step, std::size_t max_evals,
                              double ftol) {
  const std::size_t d = x0.size();
  const double dd = static_cast<double>(d);
  // Dimension-adaptive coefficients (Gao & Han 2012).
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dd;
  const double gamma = 0.75 - 1.0 / (2.0 * dd);
  const double delta = d > 1 ? 1.0 - 1.0 / dd : 0.5;

  std::size_t evals = 0;
  auto project = [](std::vector<double> x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
  };
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };

  std::vector<double> best_x = project(std::move(x0));
  double best_f = eval(best_x);

  // A collapsed simplex is rebuilt around the incumbent until a rebuild stops
  // improving it.
  for (int rebuild = 0; rebuild < 4 && evals < max_evals; ++rebuild) {
    std::vector<std::vector<double>> pts(d + 1, best_x);
    std::vector<double> vals(d + 1, best_f);
    for (std::size_t k = 0; k < d; ++k) {
      auto& p = pts[k + 1];
      p[k] += p[k] + initial_step <= 1.0 ? initial_step : -initial_step;
      vals[k + 1] = eval(p);
    }
    const double start_f = best_f;
    std::vector<std::size_t> order(d + 1);
    while (evals < max_evals) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      const std::size_t lo = order.front(), hi = order.back(), nh = order[d - 1];
      double diam = 0.0;
      for (std::size_t k = 0; k <= d; ++k)
        for (std::size_t c = 0; c < d; ++c) diam = std::max(diam, std::abs(pts[k][c] - pts[lo][c]));
      if (vals[hi] - vals[lo] <= ftol * (std::abs(vals[lo]) + ftol) && diam < 1e-9) break;
      if (diam < 1e-12) break;

      std::vector<double> centroid(d, 0.0);
      for (std::size_t k = 0; k <= d; ++k)
        if (k != hi)
          for (std::size_t c = 0; c < d; ++c) centroid[c] += pts[k][c] / dd;
      auto along = [&](double t) {
        std::vector<double> x(d);
        for (std::size_t c = 0; c < d; ++c) x[c] = centroid[c] + t * (centroid[c] - pts[hi][c]);
        return project(std::move(x));
      };

      auto xr = along(alpha);
      const double fr = eval(xr);
      if (fr < vals[lo]) {
        auto xe = along(alpha * beta);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[hi] = std::move(xe);
          vals[hi] = fe;
        } else {
          pts[hi] = std::move(xr);
          vals[hi] = fr;
        }
        continue;
      }
      if (fr < vals[nh]) {
        pts[hi] = std::move(xr);
        vals[hi] = fr;
        continue;
      }
      const bool outside = fr < vals[hi];
      auto xc = along(outside ? alpha * gamma : -gamma);
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[hi])) {
        pts[hi] = std::move(xc);
        vals[hi] = fc;
        continue;
      }
      for (std::size_t k = 0; k <= d; ++k) {
        if (k == lo) continue;
        for (std::size_t c = 0; c < d; ++c) pts[k][c] = pts[lo][c] + delta * (pts[k][c] - pts[lo][c]);
        pts[k] = project(std::move(pts[k]));
        vals[k] = eval(pts[k]);
      }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    const auto idx = static_cast<std::size_t>(it - vals.begin());
    if (vals[idx] < best_f) {
      best_f = vals[idx];
      best_x = pts[idx];
    }
    if (!(best_f < start_f - ftol * (std::abs(start_f) + ftol))) break;
    initial_step *= 0.5;
  }
  return {best_x, best_f, evals};
}

namespace {

CompositeSolution decode(const std::vector<double>& x, const OptimizerConfig& cfg, const Unitary2& ideal) {
  CompositeSolution sol;
  sol.ideal = ideal;
  const double wl = cfg.width_bounds.lo, wh = cfg.width_bounds.hi;
  for (std::size_t i = 0; i < cfg.n_segments; ++i) {
    Segment s;
    s.wa_um = wl + x[3 * i] * (wh - wl);
    s.wb_um = wl + x[3 * i + 1] * (wh - wl);
    s.z_um = cfg.length_lo_um + x[3 * i + 2] * (cfg.length_hi_um - cfg.length_lo_um);
    sol.segments.push_back(s);
  }
  return sol;
}

RestartRecord local_search(const OptimizerConfig& cfg, const Unitary2& ideal, const CouplerPhysics& phys,
                           const std::vector<double>& x0, double step) {
  const std::uint64_t obj_seed = cfg.seed ^ 0x5bd1e995u;
  auto objective = [&](const std::vector<double>& x) {
    return -robust_objective(decode(x, cfg, ideal), phys, cfg.sigma_objective_um, cfg.objective_samples,
                             obj_seed);
  };
  RestartRecord rec;
  rec.start_objective = -objective(x0);
  const auto res = nelder_mead_box(objective, x0, step, cfg.max_evals);
  rec.solution = decode(res.x, cfg, ideal);
  rec.objective = -res.value;
  rec.evaluations = res.evaluations + 1;
  rec.zero_error_fidelity = gate_fidelity(ideal, composite_unitary(rec.solution, phys));
  rec.valid = rec.zero_error_fidelity >= 0.999;
  return rec;
}

RestartRecord run_restart(const OptimizerConfig& cfg, const Unitary2& ideal, const CouplerPhysics& phys,
                          std::size_t restart) {
  const std::size_t d = 3 * cfg.n_segments;
  // Start point: Philox stream keyed on the config seed, one counter per restart.
  const Philox4x32 gen(cfg.seed);
  std::vector<double> x0(d);
  for (std::size_t c = 0; c < d; ++c) {
    const auto blk = gen({static_cast<std::uint32_t>(restart), static_cast<std::uint32_t>(c), 0x6f707421u, 0u});
    x0[c] = static_cast<double>((std::uint64_t{blk[0]} << 21) ^ blk[1]) * 0x1.0p-53;
  }
  return local_search(cfg, ideal, phys, x0, 0.1);
}

}  // namespace

RestartRecord refine_solution(const CompositeSolution& start, const OptimizerConfig& cfg,
                              const CouplerPhysics& phys) {
  cfg.validate();
  phys.validate();
  if (start.size() != cfg.n_segments)
    throw ConfigError("start solution has " + std::to_string(start.size()) + " segments, expected " +
                          std::to_string(cfg.n_segments),
                      "optimizer.n_segments");
  start.validate(cfg.width_bounds);
  const double wl = cfg.width_bounds.lo, ww = cfg.width_bounds.hi - cfg.width_bounds.lo;
  const double zl = cfg.length_lo_um, zw = cfg.length_hi_um - cfg.length_lo_um;
  std::vector<double> x0;
  for (const auto& s : start.segments) {
    if (s.z_um < zl || s.z_um > cfg.length_hi_um)
      throw ConfigError("start solution length outside the optimizer bounds", "optimizer.length_bounds");
    x0.push_back((s.wa_um - wl) / ww);
    x0.push_back((s.wb_um - wl) / ww);
    x0.push_back((s.z_um - zl) / zw);
  }
  // Small initial simplex keeps the search near the given geometry.
  auto rec = local_search(cfg, start.ideal, phys, x0, 0.02);
  rec.solution.ideal_name = start.ideal_name;
  return rec;
}

OptimizationResult optimize_solution(const OptimizerConfig& cfg, const Unitary2& ideal,
                                     const CouplerPhysics& phys, const std::string& ideal_name) {
  cfg.validate();
  phys.validate();
  OptimizationResult out;
  out.restarts.resize(cfg.restarts);
  const unsigned nw = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cfg.restarts)));
  auto work = [&](unsigned w) {
    for (std::size_t r = w; r < cfg.restarts; r += nw) out.restarts[r] = run_restart(cfg, ideal, phys, r);
  };
  if (nw == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nw; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  bool found = false;
  for (std::size_t r = 0; r < out.restarts.size(); ++r) {
    const auto& rec = out.restarts[r];
    if (!rec.valid) continue;
    if (!found || rec.objective > out.objective) {
      found = true;
      out.best_restart = r;
      out.objective = rec.objective;
    }
  }
  if (!found) {
    out.failure = "no restart reached zero-error fidelity 0.999 within max_evals";
    return out;
  }
  out.ok = true;
  for (auto& rec : out.restarts) rec.solution.ideal_name = ideal_name;
  out.best = out.restarts[out.best_restart].solution;
  out.zero_error_fidelity = out.restarts[out.best_restart].zero_error_fidelity;
  return out;
}

}  // namespace cpt
