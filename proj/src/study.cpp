#include "cpthreshold/study.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cpthreshold/errors.hpp"
#include "cpthreshold/optimizer.hpp"
#include "cpthreshold/solution_io.hpp"

#ifndef CPT_VERSION
#define CPT_VERSION "0.0.0"
#endif

namespace cpt {

using nlohmann::json;
namespace fs = std::filesystem;

const char* tool_version() { return CPT_VERSION; }

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

class Csv {
 public:
  Csv(const StudyConfig& cfg, std::string columns) {
    os_ << "# cpthreshold " << tool_version() << " csv-schema v1\n";
    os_ << "# config: " << cfg.to_json().dump() << '\n';
    os_ << columns << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }
  std::ostringstream os_;
};

constexpr const char* kPointColumns =
    "mode,sigma_um,rho,rho_bar,n_segments,mean,std,stderr_mean,samples,seed,solution_id";

void point_row(Csv& csv, CorrelationMode mode, const GridPoint& g, const FidelityStats& s, std::size_t n,
               const std::string& id) {
  csv.row(to_string(mode), g.sigma_um, g.rho, g.rho_bar, n, s.mean, s.std, s.stderr_mean, s.samples, s.seed, id);
}

struct Context {
  const StudyConfig& cfg;
  StudyOutcome out;
  json doc;

  explicit Context(const StudyConfig& c) : cfg(c) {
    doc["tool"] = "cpthreshold";
    doc["version"] = tool_version();
    doc["study_kind"] = to_string(c.kind);
    doc["config"] = c.to_json();
  }

  McOptions mc() const { return {cfg.samples, cfg.seed, cfg.workers}; }
  std::size_t m() const { return cfg.length_errors ? 3 : 2; }

  void flag(const std::string& f) { out.flags.push_back(f); }
  void check(const PairedStats& p, const std::string& where) {
    if (p.unreliable()) flag("rejected-sample overflow at " + where);
  }

  void emit(const std::string& name, const std::string& content) {
    const fs::path p = cfg.output_dir / name;
    write_file(p, content);
    out.files.push_back(p);
  }

  void finish(const std::string& summary) {
    doc["flags"] = out.flags;
    emit("results.json", doc.dump(2) + "\n");
    out.results = doc;
    out.exit_code = out.flags.empty() ? kExitOk : kExitNumerical;
    out.summary = to_string(cfg.kind) + ": " + summary + " -> " + (cfg.output_dir / "results.json").string();
    if (!out.flags.empty()) out.summary += " [flagged: " + std::to_string(out.flags.size()) + "]";
  }
};

CompositeSolution load_cp(const StudyConfig& cfg) {
  auto sol = load_solution(cfg.solution_path);
  sol.validate(cfg.optimizer.width_bounds);
  return sol;
}

CompositeSolution load_uniform(const StudyConfig& cfg, const CompositeSolution& cp) {
  CompositeSolution u;
  if (cfg.uniform_path) {
    u = load_solution(*cfg.uniform_path);
  } else {
    u = full_transfer_coupler(cfg.physics, cfg.uniform_width_um);
    u.ideal = cp.ideal;
    u.ideal_name = cp.ideal_name;
  }
  if (u.size() != 1) throw ConfigError("uniform coupler must have exactly one segment", "solution.uniform");
  return u;
}

std::string interval(const ThresholdResult& r) {
  std::ostringstream os;
  os << num(r.rho_c) << " [" << num(r.ci_low) << ", " << num(r.ci_high) << "]";
  return os.str();
}

BisectionOptions bisection(const Context& ctx) {
  BisectionOptions b;
  b.sigma_um = ctx.cfg.sigma_um;
  b.rho = ctx.cfg.rho;
  b.rho_bar = ctx.cfg.rho_bar;
  b.tol = ctx.cfg.tol;
  b.max_doublings = ctx.cfg.max_doublings;
  b.m = ctx.m();
  b.mc = ctx.mc();
  return b;
}

CoefficientOptions coefficient_options(const Context& ctx, CorrelationMode mode) {
  CoefficientOptions o;
  o.sigma_grid = mode == CorrelationMode::segments ? ctx.cfg.sigma_grid : ctx.cfg.waveguides_sigma_grid;
  o.rho_grid = mode == CorrelationMode::waveguides ? ctx.cfg.rho_bar_grid : ctx.cfg.rho_grid;
  o.rho_bar_grid = ctx.cfg.rho_bar_grid;
  o.max_sigma_um = ctx.cfg.max_sigma_um;
  o.m = ctx.m();
  o.mc = ctx.mc();
  return o;
}

std::optional<ThresholdResult> closed_form(CorrelationMode mode, const SeriesCoefficients& co, std::string& why) {
  try {
    if (mode == CorrelationMode::segments) return critical_rho_segments(co);
    if (mode == CorrelationMode::waveguides) return critical_rho_waveguides(co);
    why = "closed form defined for segments and waveguides modes only";
  } catch (const std::domain_error& e) {
    why = e.what();
  }
  return std::nullopt;
}

// sweep_rho / sweep_rho_bar: one row per grid value.
void run_sweep(Context& ctx, ThresholdAxis axis) {
  const auto& cfg = ctx.cfg;
  if (axis == ThresholdAxis::rho && cfg.mode == CorrelationMode::waveguides)
    throw ConfigError("sweep_rho needs mode segments or general", "errors.mode");
  if (axis == ThresholdAxis::rho_bar && cfg.mode == CorrelationMode::segments)
    throw ConfigError("sweep_rho_bar needs mode waveguides or general", "errors.mode");
  const auto cp = load_cp(cfg);
  const auto uni = load_uniform(cfg, cp);
  const auto cp_id = solution_id(cp), uni_id = solution_id(uni);
  const auto& grid = axis == ThresholdAxis::rho ? cfg.rho_grid : cfg.rho_bar_grid;
  if (grid.empty()) throw ConfigError("grid must not be empty", "errors.rho_grid");

  Csv cp_csv(cfg, kPointColumns), uni_csv(cfg, kPointColumns);
  json rows = json::array();
  for (double x : grid) {
    GridPoint g;
    g.sigma_um = cfg.sigma_um;
    g.rho = axis == ThresholdAxis::rho ? x : (cfg.mode == CorrelationMode::waveguides ? 1.0 : cfg.rho);
    g.rho_bar = axis == ThresholdAxis::rho_bar ? x : (cfg.mode == CorrelationMode::segments ? 1.0 : cfg.rho_bar);
    CorrelationSpec spec{g.sigma_um, g.rho, g.rho_bar, cp.size(), ctx.m()};
    g.stats = paired_fidelity_diff(cp, uni, spec, cfg.mode, cfg.physics, ctx.mc());
    ctx.check(g.stats, to_string(axis) + "=" + num(x));
    point_row(cp_csv, cfg.mode, g, g.stats.cp, cp.size(), cp_id);
    point_row(uni_csv, cfg.mode, g, g.stats.uniform, 1, uni_id);
    rows.push_back({{"x", x}, {"paired", to_json(g.stats)}});
  }
  ctx.emit("points.csv", cp_csv.str());
  ctx.emit("uniform.csv", uni_csv.str());

  std::string summary = "sigma_um=" + num(cfg.sigma_um) + " points=" + std::to_string(grid.size());
  if (cfg.sigma_um > 0.0) {
    const auto b = bisection(ctx);
    const auto r = critical_rho_empirical(cp, uni, cfg.mode, axis, cfg.physics, b);
    const auto s = std_threshold(cp, uni, cfg.mode, axis, cfg.physics, b);
    if (r.unreliable || s.unreliable) ctx.flag("rejected-sample overflow during bisection");
    ctx.doc["rho_c"] = to_json(r);
    ctx.doc["rho_c_std"] = to_json(s);
    summary += " rho_c=" + interval(r) + " (" + to_string(r.verdict) + ")";
  }
  ctx.doc["inputs"] = {{"solution_id", cp_id}, {"uniform_id", uni_id}, {"axis", to_string(axis)}};
  ctx.doc["points"] = std::move(rows);
  ctx.finish(summary);
}

void run_coefficients(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto cp = load_cp(cfg);
  const auto uni = load_uniform(cfg, cp);
  const auto cp_id = solution_id(cp), uni_id = solution_id(uni);
  std::vector<GridPoint> pts;
  const auto co = estimate_coefficients(cp, uni, cfg.mode, cfg.physics, coefficient_options(ctx, cfg.mode), &pts);
  Csv cp_csv(cfg, kPointColumns), uni_csv(cfg, kPointColumns);
  for (const auto& g : pts) {
    ctx.check(g.stats, "sigma=" + num(g.sigma_um) + " rho=" + num(g.rho) + " rho_bar=" + num(g.rho_bar));
    point_row(cp_csv, cfg.mode, g, g.stats.cp, cp.size(), cp_id);
    point_row(uni_csv, cfg.mode, g, g.stats.uniform, 1, uni_id);
  }
  ctx.emit("points.csv", cp_csv.str());
  ctx.emit("uniform.csv", uni_csv.str());
  if (co.contaminated) ctx.flag("regression residual exceeds 10x Monte Carlo stderr");

  ctx.doc["inputs"] = {{"solution_id", cp_id}, {"uniform_id", uni_id}};
  ctx.doc["coefficients"] = to_json(co);
  std::string summary = "mode=" + to_string(cfg.mode) + " b_phy=" + num(co.b_phy) + " b_cp=" + num(co.b_cp) +
                        " c_cp=" + num(co.c_cp);
  std::string why;
  if (const auto cf = closed_form(cfg.mode, co, why)) {
    auto r = *cf;
    r.coefficients.reset();
    ctx.doc["rho_c"] = to_json(r);
    summary += " rho_c=" + interval(r);
  } else {
    ctx.doc["rho_c"] = nullptr;
    ctx.doc["rho_c_unavailable"] = why;
  }
  if (cfg.mode != CorrelationMode::general && cfg.sigma_um > 0.0) {
    const auto axis = cfg.mode == CorrelationMode::segments ? ThresholdAxis::rho : ThresholdAxis::rho_bar;
    const auto b = bisection(ctx);
    const auto e = critical_rho_empirical(cp, uni, cfg.mode, axis, cfg.physics, b);
    const auto s = std_threshold(cp, uni, cfg.mode, axis, cfg.physics, b);
    if (e.unreliable || s.unreliable) ctx.flag("rejected-sample overflow during bisection");
    ctx.doc["rho_c_empirical"] = to_json(e);
    ctx.doc["rho_c_std"] = to_json(s);
    summary += " empirical=" + interval(e);
  }
  ctx.finish(summary);
}

void run_curve(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto cp = load_cp(cfg);
  const auto uni = load_uniform(cfg, cp);
  const auto pts = critical_curve(cp, uni, cfg.physics, cfg.rho_bar_grid, bisection(ctx));
  Csv csv(cfg, "rho_bar,rho,verdict,ci_low,ci_high,sigma_um,n_segments,samples,seed,solution_id");
  const auto id = solution_id(cp);
  json jp = json::array();
  for (const auto& p : pts) {
    csv.row(p.rho_bar, p.rho, to_string(p.verdict), p.ci_low, p.ci_high, cfg.sigma_um, cp.size(), cfg.samples,
            cfg.seed, id);
    jp.push_back({{"rho_bar", p.rho_bar},
                  {"rho", p.rho},
                  {"verdict", to_string(p.verdict)},
                  {"ci", {p.ci_low, p.ci_high}}});
  }
  ctx.emit("curve.csv", csv.str());
  ctx.doc["inputs"] = {{"solution_id", id}, {"uniform_id", solution_id(uni)}};
  ctx.doc["points"] = std::move(jp);
  std::string summary = "points=" + std::to_string(pts.size());
  json fits = json::object();
  try {
    const auto f = fit_bilinear_curve(pts);
    fits["bilinear"] = to_json(f);
    summary += " bilinear max_residual=" + num(f.max_residual);
  } catch (const std::invalid_argument& e) {
    fits["bilinear"] = {{"error", e.what()}};
  }
  try {
    const auto f = fit_polynomial_curve(pts, cfg.curve_degree);
    fits["polynomial"] = to_json(f);
    summary += " poly" + std::to_string(cfg.curve_degree) + " max_residual=" + num(f.max_residual);
  } catch (const std::invalid_argument& e) {
    fits["polynomial"] = {{"error", e.what()}};
  }
  ctx.doc["curve_fit"] = std::move(fits);
  ctx.finish(summary);
}

void run_variance(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.mode == CorrelationMode::general) throw ConfigError("variance_theorem needs segments or waveguides mode", "errors.mode");
  const auto cp = load_cp(cfg);
  const auto uni = load_uniform(cfg, cp);
  const auto& grid = cfg.mode == CorrelationMode::segments ? cfg.rho_grid : cfg.rho_bar_grid;
  const auto checks = variance_theorem_check(cp, uni, cfg.mode, cfg.physics, grid, cfg.sigma_grid, ctx.mc(), ctx.m());
  Csv cp_csv(cfg, kPointColumns), uni_csv(cfg, kPointColumns);
  const auto cp_id = solution_id(cp), uni_id = solution_id(uni);
  json rows = json::array();
  std::size_t better = 0, violations = 0;
  for (const auto& c : checks) {
    ctx.check(c.point.stats, "sigma=" + num(c.point.sigma_um));
    point_row(cp_csv, cfg.mode, c.point, c.point.stats.cp, cp.size(), cp_id);
    point_row(uni_csv, cfg.mode, c.point, c.point.stats.uniform, 1, uni_id);
    const auto& u = c.point.stats.uniform;
    better += c.cp_better ? 1 : 0;
    violations += (c.bound_holds && c.std_holds) ? 0 : 1;
    rows.push_back({{"sigma_um", c.point.sigma_um},
                    {"rho", c.point.rho},
                    {"rho_bar", c.point.rho_bar},
                    {"cp_better", c.cp_better},
                    {"bound_holds", c.bound_holds},
                    {"std_holds", c.std_holds},
                    {"uniform_ratio", u.mean < 1.0 ? finite_or_null(u.std / (1.0 - u.mean)) : json(nullptr)},
                    {"paired", to_json(c.point.stats)}});
  }
  ctx.emit("points.csv", cp_csv.str());
  ctx.emit("uniform.csv", uni_csv.str());
  ctx.doc["inputs"] = {{"solution_id", cp_id}, {"uniform_id", uni_id}};
  ctx.doc["checks"] = std::move(rows);
  ctx.doc["cp_better_points"] = better;
  ctx.doc["violations"] = violations;
  ctx.finish("grid=" + std::to_string(checks.size()) + " cp_better=" + std::to_string(better) +
             " violations=" + std::to_string(violations));
}

json restart_json(const RestartRecord& r) {
  return {{"solution", solution_to_json(r.solution)},
          {"solution_id", solution_id(r.solution)},
          {"start_objective", r.start_objective},
          {"objective", r.objective},
          {"zero_error_fidelity", r.zero_error_fidelity},
          {"evaluations", r.evaluations},
          {"valid", r.valid}};
}

void run_optimize(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto oc = cfg.optimizer;
  oc.workers = cfg.workers;
  if (cfg.refine_from) {
    const auto start = load_solution(*cfg.refine_from);
    oc.n_segments = start.size();
    const auto rec = refine_solution(start, oc, cfg.physics);
    ctx.doc["inputs"] = {{"start_id", solution_id(start)}};
    ctx.doc["restarts"] = json::array({restart_json(rec)});
    if (!rec.valid) {
      ctx.flag("refined solution below zero-error fidelity 0.999");
    } else {
      ctx.emit("solution.json", solution_to_json(rec.solution).dump(2) + "\n");
    }
    ctx.doc["best"] = restart_json(rec);
    ctx.finish("refined objective=" + num(rec.objective) + " F0=" + num(rec.zero_error_fidelity));
    return;
  }
  const auto res = optimize_solution(oc, named_gate(cfg.ideal), cfg.physics, cfg.ideal);
  json rs = json::array();
  for (const auto& r : res.restarts) rs.push_back(restart_json(r));
  ctx.doc["restarts"] = std::move(rs);
  if (!res.ok) {
    ctx.flag(res.failure);
    ctx.doc["best"] = nullptr;
    ctx.finish("failed: " + res.failure);
    return;
  }
  ctx.emit("solution.json", solution_to_json(res.best).dump(2) + "\n");
  ctx.doc["best"] = restart_json(res.restarts[res.best_restart]);
  ctx.doc["best_restart"] = res.best_restart;
  const auto uni = full_transfer_coupler(cfg.physics, cfg.uniform_width_um);
  const double uobj =
      robust_objective(uni, cfg.physics, oc.sigma_objective_um, oc.objective_samples, oc.seed ^ 0x5bd1e995u);
  ctx.doc["uniform_objective"] = uobj;
  ctx.finish("n=" + std::to_string(oc.n_segments) + " objective=" + num(res.objective) +
             " uniform=" + num(uobj) + " F0=" + num(res.zero_error_fidelity));
}

// Per n: optimize, then closed-form segments threshold and std threshold for
// every valid restart; min over the solution set.
void run_scaling(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto ideal = named_gate(cfg.ideal);
  Csv csv(cfg,
          "n_segments,restart,solution_id,valid,objective,zero_error_fidelity,c_cp,rho_c,ci_low,ci_high,"
          "rho_c_std,samples,seed");
  json per_n = json::array();
  std::vector<std::pair<double, double>> mins, std_mins;
  const auto uni = [&] {
    auto u = full_transfer_coupler(cfg.physics, cfg.uniform_width_um);
    u.ideal = ideal;
    u.ideal_name = cfg.ideal;
    return u;
  }();
  const auto seg_opts = coefficient_options(ctx, CorrelationMode::segments);
  const auto wg_opts = coefficient_options(ctx, CorrelationMode::waveguides);
  auto b = bisection(ctx);
  b.rho_bar = 1.0;

  for (std::size_t n : cfg.n_list) {
    auto oc = cfg.optimizer;
    oc.n_segments = n;
    oc.workers = cfg.workers;
    const auto res = optimize_solution(oc, ideal, cfg.physics, cfg.ideal);
    json entry = {{"n_segments", n}};
    json sols = json::array();
    double best = std::numeric_limits<double>::infinity(), best_std = best;
    json best_json = nullptr;
    for (std::size_t r = 0; r < res.restarts.size(); ++r) {
      const auto& rec = res.restarts[r];
      const auto id = solution_id(rec.solution);
      json js = restart_json(rec);
      js["restart"] = r;
      double rho_c = std::nan(""), lo = std::nan(""), hi = std::nan(""), c_cp = std::nan(""), rs = std::nan("");
      if (rec.valid) {
        ctx.emit("solutions/n" + std::to_string(n) + "_r" + std::to_string(r) + ".json",
                 solution_to_json(rec.solution).dump(2) + "\n");
        const auto co = estimate_coefficients(rec.solution, uni, CorrelationMode::segments, cfg.physics, seg_opts);
        c_cp = co.c_cp;
        js["coefficients"] = to_json(co);
        if (co.c_cp > 0.0) {
          const auto t = critical_rho_segments(co);
          rho_c = t.rho_c;
          lo = t.ci_low;
          hi = t.ci_high;
          js["rho_c"] = to_json(t);
          // A threshold below zero means effective on the whole range.
          const double clamped = std::max(0.0, rho_c);
          if (clamped < best) {
            best = clamped;
            best_json = {{"restart", r}, {"solution_id", id}, {"rho_c", rho_c}, {"ci", {lo, hi}}};
          }
        }
        const auto st = std_threshold(rec.solution, uni, CorrelationMode::segments, ThresholdAxis::rho,
                                      cfg.physics, b);
        rs = st.rho_c;
        js["rho_c_std"] = to_json(st);
        best_std = std::min(best_std, rs);
        if (co.contaminated) ctx.flag("regression contaminated for n=" + std::to_string(n) + " restart " + std::to_string(r));
      }
      csv.row(n, r, id, rec.valid ? 1 : 0, rec.objective, rec.zero_error_fidelity, c_cp, rho_c, lo, hi, rs,
              cfg.samples, cfg.seed);
      sols.push_back(std::move(js));
    }
    entry["solutions"] = std::move(sols);
    entry["min_rho_c"] = std::isfinite(best) ? json(best) : json(nullptr);
    entry["min_rho_c_solution"] = best_json;
    entry["min_rho_c_std"] = std::isfinite(best_std) ? json(best_std) : json(nullptr);
    if (std::isfinite(best)) mins.emplace_back(static_cast<double>(n), best);
    if (std::isfinite(best_std)) std_mins.emplace_back(static_cast<double>(n), best_std);
    if (res.ok) {
      const auto co = estimate_coefficients(res.best, uni, CorrelationMode::waveguides, cfg.physics, wg_opts);
      std::string why;
      if (const auto t = closed_form(CorrelationMode::waveguides, co, why)) {
        auto tr = *t;
        tr.coefficients.reset();
        entry["rho_c_waveguides"] = to_json(tr);
      } else {
        entry["rho_c_waveguides"] = {{"error", why}};
      }
      entry["waveguides_coefficients"] = to_json(co);
    } else {
      ctx.flag("optimizer failed for n=" + std::to_string(n));
    }
    per_n.push_back(std::move(entry));
  }
  ctx.emit("scaling.csv", csv.str());
  ctx.doc["per_n"] = std::move(per_n);
  std::string summary = "n=" + std::to_string(cfg.n_list.size()) + " values";
  auto fit = [&](const std::vector<std::pair<double, double>>& pts, int e, const char* key) {
    try {
      const auto f = scaling_fit(pts, e);
      ctx.doc[key] = {{"a", f.a}, {"r_squared", finite_or_null(f.r_squared)}, {"exponent", e}};
      summary += std::string(" ") + key + ".r2=" + num(f.r_squared);
    } catch (const std::invalid_argument& ex) {
      ctx.doc[key] = {{"error", ex.what()}};
    }
  };
  fit(mins, 1, "fit_mean");
  fit(std_mins, 2, "fit_std");
  ctx.finish(summary);
}

}  // namespace

StudyOutcome run_study(const StudyConfig& cfg) {
  if (cfg.output_dir.empty()) throw ConfigError("no output directory (use --out or study.output_dir)", "study.output_dir");
  Context ctx(cfg);
  switch (cfg.kind) {
    case StudyKind::sweep_rho: run_sweep(ctx, ThresholdAxis::rho); break;
    case StudyKind::sweep_rho_bar: run_sweep(ctx, ThresholdAxis::rho_bar); break;
    case StudyKind::coefficients: run_coefficients(ctx); break;
    case StudyKind::curve: run_curve(ctx); break;
    case StudyKind::variance_theorem: run_variance(ctx); break;
    case StudyKind::optimize: run_optimize(ctx); break;
    case StudyKind::scaling_n: run_scaling(ctx); break;
  }
  return std::move(ctx.out);
}

json to_json(const FidelityStats& s) {
  return {{"mean", s.mean},         {"std", s.std},         {"stderr_mean", s.stderr_mean},
          {"stderr_std", s.stderr_std}, {"samples", s.samples}, {"accepted", s.accepted},
          {"rejected", s.rejected}, {"seed", s.seed},       {"unreliable", s.unreliable()}};
}

json to_json(const PairedStats& p) {
  return {{"cp", to_json(p.cp)},
          {"uniform", to_json(p.uniform)},
          {"mean_diff", p.mean_diff},
          {"std_diff", p.std_diff},
          {"stderr_diff", p.stderr_diff},
          {"std_gap", p.std_gap},
          {"stderr_std_gap", p.stderr_std_gap}};
}

json to_json(const SeriesCoefficients& c) {
  json cov = json::array();
  for (Eigen::Index i = 0; i < c.diff_covariance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.diff_covariance.cols(); ++k) row.push_back(c.diff_covariance(i, k));
    cov.push_back(std::move(row));
  }
  return {{"mode", to_string(c.mode)},
          {"b_phy", c.b_phy},
          {"c_phy", c.c_phy},
          {"b_cp", c.b_cp},
          {"c_cp", c.c_cp},
          {"d_cp", c.d_cp},
          {"e_cp", c.e_cp},
          {"diff", c.diff},
          {"diff_covariance", std::move(cov)},
          {"fit_residual", c.fit_residual},
          {"mc_stderr", c.mc_stderr},
          {"contaminated", c.contaminated},
          {"sigma_grid_um", c.sigma_grid},
          {"rho_grid", c.rho_grid},
          {"rho_bar_grid", c.rho_bar_grid},
          {"samples", c.samples},
          {"seed", c.seed}};
}

json to_json(const ThresholdResult& r) {
  json j = {{"rho_c", finite_or_null(r.rho_c)},
            {"ci", {finite_or_null(r.ci_low), finite_or_null(r.ci_high)}},
            {"method", to_string(r.method)},
            {"axis", to_string(r.axis)},
            {"verdict", to_string(r.verdict)}};
  if (r.method == ThresholdMethod::bisection) {
    j["evaluations"] = r.evaluations;
    j["stderr_at_crossing"] = r.stderr_at_crossing;
    j["unreliable"] = r.unreliable;
  }
  if (r.coefficients) j["coefficients"] = to_json(*r.coefficients);
  return j;
}

json to_json(const CurveFit& f) {
  json j = {{"kind", f.kind == CurveKind::bilinear ? "bilinear" : "polynomial"},
            {"degree", f.degree},
            {"coefficients", f.coefficients},
            {"max_residual", f.max_residual},
            {"mean_residual", f.mean_residual}};
  if (f.kind == CurveKind::bilinear)
    j["named"] = {{"B", f.coefficients[0]}, {"C", f.coefficients[1]}, {"D", f.coefficients[2]}, {"E", f.coefficients[3]}};
  return j;
}

}  // namespace cpt
