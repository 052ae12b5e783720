#include "cpthreshold/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "cpthreshold/errors.hpp"

namespace cpt {

std::string to_string(ThresholdMethod m) { return m == ThresholdMethod::closed_form ? "closed_form" : "bisection"; }
std::string to_string(ThresholdAxis a) { return a == ThresholdAxis::rho ? "rho" : "rho_bar"; }
std::string to_string(ThresholdVerdict v) {
  switch (v) {
    case ThresholdVerdict::crossing: return "crossing";
    case ThresholdVerdict::effective_everywhere: return "effective_everywhere";
    case ThresholdVerdict::no_effective_region: return "no_effective_region";
  }
  return "crossing";
}

namespace {

constexpr double kZ95 = 1.959963984540054;

// Design row for one grid point, already divided by sigma^2.
Eigen::RowVectorXd design_row(CorrelationMode mode, bool phy, double rho, double rho_bar) {
  switch (mode) {
    case CorrelationMode::segments:
      if (phy) return Eigen::RowVectorXd::Constant(1, 1.0);
      return (Eigen::RowVectorXd(2) << 1.0, rho).finished();
    case CorrelationMode::waveguides:
      return (Eigen::RowVectorXd(2) << 1.0, rho_bar).finished();
    case CorrelationMode::general:
      if (phy) return (Eigen::RowVectorXd(2) << 1.0, rho_bar).finished();
      return (Eigen::RowVectorXd(4) << 1.0, rho_bar, rho, rho * rho_bar).finished();
  }
  return {};
}

struct LinearFit {
  Eigen::VectorXd beta;
  double rms_residual = 0.0;  // unscaled response units
};

// y_k = sigma_k^2 * (x_k . beta). Rows are weighted by sigma_k^2 / se_k (the
// inverse stderr of y_k / sigma_k^2); plain least squares when any se_k is 0.
LinearFit fit_scaled(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& s2,
                     const Eigen::VectorXd& se) {
  const bool weighted = se.size() == y.size() && (se.array() > 0.0).all();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
  if (weighted) w = s2.cwiseQuotient(se);
  const Eigen::MatrixXd xw = w.asDiagonal() * x;
  const Eigen::VectorXd yw = w.cwiseProduct(y.cwiseQuotient(s2));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  if (qr.rank() < x.cols()) throw std::invalid_argument("regression design is rank deficient");
  LinearFit f;
  f.beta = qr.solve(yw);
  const Eigen::VectorXd r = y - (x * f.beta).cwiseProduct(s2);
  const auto n = static_cast<double>(r.size());
  f.rms_residual = std::sqrt(r.squaredNorm() / n);
  return f;
}

// rho_c = -B/C with a delta-method interval from cov(B, C).
ThresholdResult ratio_threshold(double num, double den, const SeriesCoefficients& co) {
  ThresholdResult r;
  r.method = ThresholdMethod::closed_form;
  r.rho_c = num / den;
  double half = 0.0;
  if (co.diff_covariance.rows() >= 2) {
    const double vb = co.diff_covariance(0, 0), vc = co.diff_covariance(1, 1), cbc = co.diff_covariance(0, 1);
    const double var = (vb + r.rho_c * r.rho_c * vc + 2.0 * r.rho_c * cbc) / (den * den);
    half = kZ95 * std::sqrt(std::max(0.0, var));
  }
  r.ci_low = r.rho_c - half;
  r.ci_high = r.rho_c + half;
  if (r.rho_c < 0.0)
    r.verdict = ThresholdVerdict::effective_everywhere;
  else if (r.rho_c > 1.0)
    r.verdict = ThresholdVerdict::no_effective_region;
  r.coefficients = co;
  return r;
}

void require_grid(const std::vector<double>& g, const char* field, std::size_t min_points) {
  std::set<double> distinct(g.begin(), g.end());
  if (distinct.size() < min_points)
    throw ConfigError(std::string(field) + " needs at least " + std::to_string(min_points) + " distinct points",
                      field);
  for (double v : g)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(field) + " values must lie in [0, 1]", field);
}

}  // namespace

SeriesCoefficients fit_coefficients(CorrelationMode mode, const std::vector<GridPoint>& points) {
  if (points.empty()) throw std::invalid_argument("no grid points to fit");
  const auto k = static_cast<Eigen::Index>(points.size());
  const Eigen::Index pc = design_row(mode, true, 0, 0).size();
  const Eigen::Index cc = design_row(mode, false, 0, 0).size();
  Eigen::MatrixXd xp(k, pc), xc(k, cc);
  Eigen::VectorXd s2(k), yp(k), yc(k), yd(k), sep(k), sec(k), sed(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& g = points[static_cast<std::size_t>(i)];
    if (!(g.sigma_um > 0.0)) throw std::invalid_argument("regression needs sigma > 0 at every grid point");
    xp.row(i) = design_row(mode, true, g.rho, g.rho_bar);
    xc.row(i) = design_row(mode, false, g.rho, g.rho_bar);
    s2(i) = g.sigma_um * g.sigma_um;
    yp(i) = g.stats.uniform.mean - 1.0;
    yc(i) = g.stats.cp.mean - 1.0;
    yd(i) = g.stats.mean_diff;
    sep(i) = g.stats.uniform.stderr_mean;
    sec(i) = g.stats.cp.stderr_mean;
    sed(i) = g.stats.stderr_diff;
  }
  const auto fp = fit_scaled(xp, yp, s2, sep);
  const auto fc = fit_scaled(xc, yc, s2, sec);
  const auto fd = fit_scaled(xc, yd, s2, sed);

  SeriesCoefficients co;
  co.mode = mode;
  co.b_phy = fp.beta(0);
  if (pc > 1) co.c_phy = fp.beta(1);
  co.b_cp = fc.beta(0);
  co.c_cp = fc.beta(1);
  if (cc > 2) {
    co.d_cp = fc.beta(2);
    co.e_cp = fc.beta(3);
  }
  co.diff.assign(fd.beta.data(), fd.beta.data() + fd.beta.size());

  // Batch replicates of the difference fit; grid points share their random
  // numbers, so replicate spread captures the cross-point correlation.
  const std::size_t nb = points.front().stats.batch_count.size();
  bool usable = nb > 2;
  for (const auto& g : points)
    if (g.stats.batch_count.size() != nb) usable = false;
  if (usable) {
    std::vector<Eigen::VectorXd> reps;
    for (std::size_t b = 0; b < nb; ++b) {
      Eigen::VectorXd yb(k);
      bool ok = true;
      for (Eigen::Index i = 0; i < k; ++i) {
        const auto& st = points[static_cast<std::size_t>(i)].stats;
        if (st.batch_count[b] == 0) ok = false;
        yb(i) = st.batch_mean_cp[b] - st.batch_mean_uniform[b];
      }
      if (ok) reps.push_back(fit_scaled(xc, yb, s2, sed).beta);
    }
    if (reps.size() > 2) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(cc);
      for (const auto& r : reps) mean += r;
      mean /= static_cast<double>(reps.size());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(cc, cc);
      for (const auto& r : reps) cov += (r - mean) * (r - mean).transpose();
      const double nr = static_cast<double>(reps.size());
      co.diff_covariance = cov / (nr - 1.0) / nr;
    }
  }

  co.fit_residual = std::max({fp.rms_residual, fc.rms_residual, fd.rms_residual});
  auto rms = [](const Eigen::VectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); };
  co.mc_stderr = std::max({rms(sep), rms(sec), rms(sed)});
  co.contaminated = co.fit_residual > 10.0 * co.mc_stderr + 1e-13;
  std::set<double> sg, rg, rbg;
  for (const auto& g : points) {
    sg.insert(g.sigma_um);
    rg.insert(g.rho);
    rbg.insert(g.rho_bar);
  }
  co.sigma_grid.assign(sg.begin(), sg.end());
  co.rho_grid.assign(rg.begin(), rg.end());
  co.rho_bar_grid.assign(rbg.begin(), rbg.end());
  co.samples = points.front().stats.samples;
  co.seed = points.front().stats.seed;
  return co;
}

SeriesCoefficients estimate_coefficients(const CompositeSolution& cp, const CompositeSolution& uniform,
                                         CorrelationMode mode, const CouplerPhysics& phys,
                                         const CoefficientOptions& opts, std::vector<GridPoint>* points) {
  std::set<double> sig(opts.sigma_grid.begin(), opts.sigma_grid.end());
  if (sig.size() < 3) throw ConfigError("sigma grid needs at least 3 distinct points", "sigma_grid");
  for (double s : opts.sigma_grid)
    if (!(s > 0.0 && s <= opts.max_sigma_um))
      throw ConfigError("sigma grid must lie in (0, " + std::to_string(opts.max_sigma_um) + "] um", "sigma_grid");
  require_grid(opts.rho_grid, mode == CorrelationMode::waveguides ? "rho_bar_grid" : "rho_grid", 3);
  if (mode == CorrelationMode::general) require_grid(opts.rho_bar_grid, "rho_bar_grid", 3);

  std::vector<GridPoint> grid;
  const std::vector<double> single{1.0};
  const auto& outer = mode == CorrelationMode::general ? opts.rho_bar_grid : single;
  for (double s : opts.sigma_grid)
    for (double rb : outer)
      for (double r : opts.rho_grid) {
        GridPoint g;
        g.sigma_um = s;
        if (mode == CorrelationMode::waveguides) {
          g.rho = 1.0;
          g.rho_bar = r;
        } else {
          g.rho = r;
          g.rho_bar = rb;
        }
        CorrelationSpec spec;
        spec.sigma_um = s;
        spec.rho = g.rho;
        spec.rho_bar = g.rho_bar;
        spec.n = cp.size();
        spec.m = opts.m;
        g.stats = paired_fidelity_diff(cp, uniform, spec, mode, phys, opts.mc);
        grid.push_back(std::move(g));
      }
  auto co = fit_coefficients(mode, grid);
  if (points) *points = std::move(grid);
  return co;
}

ThresholdResult critical_rho_segments(const SeriesCoefficients& co) {
  if (!(co.c_cp > 0.0)) throw std::domain_error("c_cp must be positive for the segments threshold");
  auto r = ratio_threshold(co.b_phy - co.b_cp, co.c_cp, co);
  r.axis = ThresholdAxis::rho;
  return r;
}

ThresholdResult critical_rho_waveguides(const SeriesCoefficients& co) {
  const double den = co.c_phy - co.c_cp;
  const double scale = std::max({std::abs(co.c_phy), std::abs(co.c_cp), std::abs(co.b_phy), std::abs(co.b_cp)});
  if (!(std::abs(den) > 1e-12 * scale) || !std::isfinite(den))
    throw std::domain_error("c_phy and c_cp coincide; the waveguides threshold is undefined");
  // -(b_phy - b_cp)/(c_phy - c_cp) written as -B/C with B = b_cp - b_phy, C = c_cp - c_phy.
  auto r = ratio_threshold(co.b_phy - co.b_cp, co.c_cp - co.c_phy, co);
  r.axis = ThresholdAxis::rho_bar;
  return r;
}

ThresholdResult bisect_crossing(const std::function<NoisyValue(double, std::size_t)>& f, double tol,
                                unsigned max_doublings) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
  ThresholdResult r;
  r.method = ThresholdMethod::bisection;
  auto eval = [&](double x, std::size_t mult) {
    ++r.evaluations;
    const auto v = f(x, mult);
    r.unreliable = r.unreliable || v.unreliable;
    return v;
  };
  const auto f0 = eval(0.0, 1);
  if (f0.value >= 0.0) {
    r.verdict = ThresholdVerdict::effective_everywhere;
    r.stderr_at_crossing = f0.stderr_value;
    return r;
  }
  const auto f1 = eval(1.0, 1);
  if (f1.value < 0.0) {
    r.verdict = ThresholdVerdict::no_effective_region;
    r.rho_c = r.ci_low = r.ci_high = 1.0;
    r.stderr_at_crossing = f1.stderr_value;
    return r;
  }
  double lo = 0.0, hi = 1.0;
  NoisyValue flo = f0, fhi = f1;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    std::size_t mult = 1;
    auto v = eval(mid, mult);
    for (unsigned d = 0; d < max_doublings && std::abs(v.value) < 2.0 * v.stderr_value; ++d) {
      mult *= 2;
      v = eval(mid, mult);
    }
    if (v.value >= 0.0) {
      hi = mid;
      fhi = v;
    } else {
      lo = mid;
      flo = v;
    }
  }
  const double t = -flo.value / (fhi.value - flo.value);
  r.rho_c = lo + t * (hi - lo);
  r.stderr_at_crossing = std::max(flo.stderr_value, fhi.stderr_value);
  const double slope = f1.value - f0.value;
  const double half = kZ95 * r.stderr_at_crossing / std::abs(slope) + 0.5 * (hi - lo);
  r.ci_low = std::max(0.0, r.rho_c - half);
  r.ci_high = std::min(1.0, r.rho_c + half);
  return r;
}

namespace {

template <class Value>
ThresholdResult bisect_paired(const CompositeSolution& cp, const CompositeSolution& uniform, CorrelationMode mode,
                              ThresholdAxis axis, const CouplerPhysics& phys, const BisectionOptions& opts,
                              Value value) {
  if (axis == ThresholdAxis::rho && mode == CorrelationMode::waveguides)
    throw std::invalid_argument("waveguides mode has no rho axis");
  if (axis == ThresholdAxis::rho_bar && mode == CorrelationMode::segments)
    throw std::invalid_argument("segments mode has no rho_bar axis");
  auto f = [&](double x, std::size_t mult) {
    CorrelationSpec spec;
    spec.sigma_um = opts.sigma_um;
    spec.rho = opts.rho;
    spec.rho_bar = opts.rho_bar;
    (axis == ThresholdAxis::rho ? spec.rho : spec.rho_bar) = x;
    spec.n = cp.size();
    spec.m = opts.m;
    McOptions mc = opts.mc;
    mc.samples *= mult;
    const auto p = paired_fidelity_diff(cp, uniform, spec, mode, phys, mc);
    NoisyValue v = value(p);
    v.unreliable = p.unreliable();
    return v;
  };
  auto r = bisect_crossing(f, opts.tol, opts.max_doublings);
  r.axis = axis;
  return r;
}

}  // namespace

ThresholdResult critical_rho_empirical(const CompositeSolution& cp, const CompositeSolution& uniform,
                                       CorrelationMode mode, ThresholdAxis axis, const CouplerPhysics& phys,
                                       const BisectionOptions& opts) {
  return bisect_paired(cp, uniform, mode, axis, phys, opts, [](const PairedStats& p) {
    return NoisyValue{p.mean_diff, p.stderr_diff};
  });
}

ThresholdResult std_threshold(const CompositeSolution& cp, const CompositeSolution& uniform, CorrelationMode mode,
                              ThresholdAxis axis, const CouplerPhysics& phys, const BisectionOptions& opts) {
  return bisect_paired(cp, uniform, mode, axis, phys, opts, [](const PairedStats& p) {
    return NoisyValue{-p.std_gap, p.stderr_std_gap};
  });
}

std::vector<CurvePoint> critical_curve(const CompositeSolution& cp, const CompositeSolution& uniform,
                                       const CouplerPhysics& phys, const std::vector<double>& rho_bar_grid,
                                       const BisectionOptions& opts) {
  for (double rb : rho_bar_grid)
    if (!(rb >= 0.0 && rb <= 1.0)) throw ConfigError("rho_bar grid values must lie in [0, 1]", "rho_bar_grid");
  std::vector<CurvePoint> out;
  for (double rb : rho_bar_grid) {
    BisectionOptions o = opts;
    o.rho_bar = rb;
    const auto r = critical_rho_empirical(cp, uniform, CorrelationMode::general, ThresholdAxis::rho, phys, o);
    out.push_back({rb, r.rho_c, r.verdict, r.ci_low, r.ci_high});
  }
  return out;
}

double CurveFit::evaluate(double rho_bar) const {
  if (kind == CurveKind::polynomial) {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * rho_bar + *it;
    return acc;
  }
  const double b = coefficients[0], c = coefficients[1], d = coefficients[2], e = coefficients[3];
  const double den = e * rho_bar + d;
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return -(c * rho_bar + b) / den;
}

namespace {

std::vector<CurvePoint> usable_points(const std::vector<CurvePoint>& points) {
  std::vector<CurvePoint> out;
  for (const auto& p : points)
    if (p.verdict == ThresholdVerdict::crossing && std::isfinite(p.rho) && std::isfinite(p.rho_bar))
      out.push_back(p);
  return out;
}

void fill_residuals(CurveFit& fit, const std::vector<CurvePoint>& pts) {
  double mx = 0.0, sum = 0.0;
  for (const auto& p : pts) {
    const double r = std::abs(p.rho - fit.evaluate(p.rho_bar));
    if (!std::isfinite(r)) throw std::invalid_argument("fitted curve is singular at a data point");
    mx = std::max(mx, r);
    sum += r;
  }
  fit.max_residual = mx;
  fit.mean_residual = sum / static_cast<double>(pts.size());
}

}  // namespace

CurveFit fit_bilinear_curve(const std::vector<CurvePoint>& points) {
  const auto pts = usable_points(points);
  if (pts.size() < 4) throw std::invalid_argument("bilinear fit needs at least 4 crossing points");
  const auto k = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(k, 4);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    a.row(i) << 1.0, p.rho_bar, p.rho, p.rho * p.rho_bar;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(k);
  Eigen::Vector4d v;
  for (int iter = 0; iter < 20; ++iter) {
    const Eigen::MatrixXd aw = w.asDiagonal() * a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(aw, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (iter == 0 && s(2) <= 1e-10 * s(0))
      throw std::invalid_argument("degenerate point set: the implicit bilinear fit is not unique");
    const Eigen::Vector4d next = svd.matrixV().col(3);
    const bool done = iter > 0 && std::min((next - v).norm(), (next + v).norm()) < 1e-14;
    v = next;
    if (done) break;
    // Weight by 1/|dF/drho| so the algebraic residual approximates the distance in rho.
    for (Eigen::Index i = 0; i < k; ++i) {
      const double g = std::abs(v(3) * pts[static_cast<std::size_t>(i)].rho_bar + v(2));
      w(i) = 1.0 / std::max(g, 1e-8 * v.norm());
    }
  }
  v.normalize();
  // E > 0; for a (numerically) straight line the largest coefficient is positive.
  Eigen::Index largest = 3;
  if (std::abs(v(3)) <= 1e-12) v.cwiseAbs().maxCoeff(&largest);
  if (v(largest) < 0.0) v = -v;
  CurveFit fit;
  fit.kind = CurveKind::bilinear;
  fit.degree = 1;
  fit.coefficients = {v(0), v(1), v(2), v(3)};
  fill_residuals(fit, pts);
  return fit;
}

CurveFit fit_polynomial_curve(const std::vector<CurvePoint>& points, int degree) {
  if (degree < 0) throw std::invalid_argument("polynomial degree must be non-negative");
  const auto pts = usable_points(points);
  if (pts.size() < static_cast<std::size_t>(degree) + 2)
    throw std::invalid_argument("polynomial fit of degree " + std::to_string(degree) + " needs at least " +
                                std::to_string(degree + 2) + " crossing points");
  const auto k = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(k, degree + 1);
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double pw = 1.0;
    for (int d = 0; d <= degree; ++d) {
      a(i, d) = pw;
      pw *= pts[static_cast<std::size_t>(i)].rho_bar;
    }
    y(i) = pts[static_cast<std::size_t>(i)].rho;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < degree + 1) throw std::invalid_argument("polynomial fit is underdetermined");
  const Eigen::VectorXd c = qr.solve(y);
  CurveFit fit;
  fit.kind = CurveKind::polynomial;
  fit.degree = degree;
  fit.coefficients.assign(c.data(), c.data() + c.size());
  fill_residuals(fit, pts);
  return fit;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& n_rho, int exponent) {
  if (exponent != 1 && exponent != 2) throw std::invalid_argument("exponent must be 1 or 2");
  std::set<double> ns;
  for (const auto& [n, v] : n_rho) {
    if (!(n > 0.0) || !std::isfinite(v)) throw std::invalid_argument("scaling fit needs n > 0 and finite values");
    ns.insert(n);
  }
  if (ns.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 distinct n");
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (const auto& [n, v] : n_rho) {
    const double x = std::pow(n, -exponent);
    sxy += x * v;
    sxx += x * x;
    mean += v;
  }
  mean /= static_cast<double>(n_rho.size());
  ScalingFit out;
  out.a = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [n, v] : n_rho) {
    const double r = v - out.a * std::pow(n, -exponent);
    ss_res += r * r;
    ss_tot += (v - mean) * (v - mean);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double g_factor(const Eigen::MatrixXd& b, double rho) {
  if (b.rows() != b.cols() || b.rows() == 0) throw std::invalid_argument("b must be a non-empty square matrix");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  const double scale = b.cwiseAbs().maxCoeff();
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw std::invalid_argument("b must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  const auto& lam = es.eigenvalues();
  const double tol = 1e-12 * scale;
  if (lam.minCoeff() < -tol && lam.maxCoeff() > tol) throw std::invalid_argument("b must be semidefinite");
  const auto n = b.rows();
  const Eigen::MatrixXd w = (1.0 - rho) * Eigen::MatrixXd::Identity(n, n) + rho * Eigen::MatrixXd::Ones(n, n);
  const Eigen::MatrixXd bw = b * w;
  const double t = bw.trace();
  if (!(std::abs(t) > 1e-300) || std::abs(t) <= 1e-14 * scale * static_cast<double>(n))
    throw std::domain_error("Tr(bW) vanishes; G is undefined");
  if (rho == 1.0) return 1.0;
  const double g = std::sqrt(std::max(0.0, (bw * bw).trace())) / std::abs(t);
  return g > 1.0 && g <= 1.0 + 1e-12 ? 1.0 : g;
}

std::vector<VarianceCheck> variance_theorem_check(const CompositeSolution& cp, const CompositeSolution& uniform,
                                                  CorrelationMode mode, const CouplerPhysics& phys,
                                                  const std::vector<double>& rho_grid,
                                                  const std::vector<double>& sigma_grid, const McOptions& mc,
                                                  std::size_t m) {
  std::vector<VarianceCheck> out;
  for (double s : sigma_grid)
    for (double r : rho_grid) {
      VarianceCheck c;
      c.point.sigma_um = s;
      CorrelationSpec spec;
      spec.sigma_um = s;
      spec.n = cp.size();
      spec.m = m;
      if (mode == CorrelationMode::waveguides) {
        c.point.rho = 1.0;
        c.point.rho_bar = r;
      } else {
        c.point.rho = r;
        c.point.rho_bar = 1.0;
      }
      spec.rho = c.point.rho;
      spec.rho_bar = c.point.rho_bar;
      c.point.stats = paired_fidelity_diff(cp, uniform, spec, mode, phys, mc);
      const auto& p = c.point.stats;
      c.cp_better = p.cp.mean >= p.uniform.mean;
      if (c.cp_better) {
        const double se_bound = std::hypot(p.cp.stderr_std, std::sqrt(2.0) * p.cp.stderr_mean);
        c.bound_holds = p.cp.std <= std::sqrt(2.0) * (1.0 - p.cp.mean) + 3.0 * se_bound;
        c.std_holds = p.cp.std <= p.uniform.std + 3.0 * std::hypot(p.cp.stderr_std, p.uniform.stderr_std);
      }
      out.push_back(std::move(c));
    }
  return out;
}

}  // namespace cpt
