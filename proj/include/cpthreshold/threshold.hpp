#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpthreshold/coupler.hpp"
#include "cpthreshold/error_model.hpp"
#include "cpthreshold/mc_engine.hpp"

namespace cpt {

// Mean-fidelity expansion coefficients (units um^-2, multiplying sigma^2).
//
//   segments:   F_phy = 1 + b_phy s2          F_cp = 1 + (b_cp + c_cp rho) s2
//   waveguides: F_phy = 1 + (b_phy + c_phy rb) s2
//               F_cp  = 1 + (b_cp + c_cp rb) s2
//   general:    F_phy as waveguides
//               F_cp  = 1 + (b_cp + c_cp rb + d_cp rho + e_cp rho rb) s2
struct SeriesCoefficients {
  CorrelationMode mode = CorrelationMode::segments;
  double b_phy = 0.0, c_phy = 0.0;
  double b_cp = 0.0, c_cp = 0.0, d_cp = 0.0, e_cp = 0.0;

  // Coefficients of the paired difference F_cp - F_phy in the same design:
  // diff = B + C x + D rho + E rho rb (x = rho in segments mode, rb otherwise).
  std::vector<double> diff;
  Eigen::MatrixXd diff_covariance;  // batch-means covariance of `diff`

  double fit_residual = 0.0;  // worst RMS residual over the three fits
  double mc_stderr = 0.0;     // RMS Monte Carlo stderr of the fitted means
  bool contaminated = false;  // fit_residual > 10 * mc_stderr

  std::vector<double> sigma_grid, rho_grid, rho_bar_grid;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

enum class ThresholdMethod { closed_form, bisection };
enum class ThresholdAxis { rho, rho_bar };
enum class ThresholdVerdict {
  crossing,              // 0 <= rho_c <= 1
  effective_everywhere,  // rho_c < 0 (closed form) or diff(0) >= 0
  no_effective_region,   // rho_c > 1 (closed form) or diff(1) < 0
};

std::string to_string(ThresholdMethod m);
std::string to_string(ThresholdAxis a);
std::string to_string(ThresholdVerdict v);

struct ThresholdResult {
  double rho_c = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  ThresholdMethod method = ThresholdMethod::closed_form;
  ThresholdAxis axis = ThresholdAxis::rho;
  ThresholdVerdict verdict = ThresholdVerdict::crossing;
  std::optional<SeriesCoefficients> coefficients;
  std::size_t evaluations = 0;  // Monte Carlo runs (bisection only)
  double stderr_at_crossing = 0.0;
  bool unreliable = false;  // some run rejected too many samples
};

struct GridPoint {
  double sigma_um = 0.0, rho = 0.0, rho_bar = 0.0;
  PairedStats stats;
};

struct CoefficientOptions {
  std::vector<double> sigma_grid{0.002, 0.004, 0.00667, 0.008};
  std::vector<double> rho_grid{0.0, 0.25, 0.5, 0.75, 1.0};  // rho_bar grid in waveguides mode
  std::vector<double> rho_bar_grid{0.0, 0.25, 0.5, 0.75, 1.0};  // general mode only
  double max_sigma_um = 0.01;
  std::size_t m = 2;  // 3 adds segment-length errors
  McOptions mc;
};

// Runs the paired Monte Carlo over the grid and regresses mean - 1 on the
// sigma^2 design of the chosen mode, weighting each point by its inverse
// Monte Carlo variance. Throws ConfigError for grids outside the small-sigma
// regime or with fewer than three sigma / correlation points.
SeriesCoefficients estimate_coefficients(const CompositeSolution& cp, const CompositeSolution& uniform,
                                         CorrelationMode mode, const CouplerPhysics& phys,
                                         const CoefficientOptions& opts,
                                         std::vector<GridPoint>* points = nullptr);

// Regression step alone, on precomputed grid points.
SeriesCoefficients fit_coefficients(CorrelationMode mode, const std::vector<GridPoint>& points);

// rho_c = (b_phy - b_cp) / c_cp. Throws std::domain_error when c_cp <= 0.
ThresholdResult critical_rho_segments(const SeriesCoefficients& co);
// rho_c = -(b_phy - b_cp) / (c_phy - c_cp). Throws std::domain_error when
// the denominator vanishes.
ThresholdResult critical_rho_waveguides(const SeriesCoefficients& co);

struct BisectionOptions {
  double sigma_um = 0.00667;
  double rho = 1.0;      // fixed value of the other correlation
  double rho_bar = 1.0;
  double tol = 0.01;
  unsigned max_doublings = 3;  // sample count capped at 8x
  std::size_t m = 2;
  McOptions mc;
};

// Bisection on the paired mean difference along `axis`.
ThresholdResult critical_rho_empirical(const CompositeSolution& cp, const CompositeSolution& uniform,
                                       CorrelationMode mode, ThresholdAxis axis, const CouplerPhysics& phys,
                                       const BisectionOptions& opts);

// Bisection on std_cp - std_phy: lowest correlation with std_cp <= std_phy.
ThresholdResult std_threshold(const CompositeSolution& cp, const CompositeSolution& uniform,
                              CorrelationMode mode, ThresholdAxis axis, const CouplerPhysics& phys,
                              const BisectionOptions& opts);

// Generic form of the bisection used above. f(x, multiplier) evaluates with
// `multiplier` times the base sample count; f >= 0 means the composite arm is
// at least as good. Returns the lowest x in [0, 1] with f >= 0.
struct NoisyValue {
  double value = 0.0;
  double stderr_value = 0.0;
  bool unreliable = false;
};
ThresholdResult bisect_crossing(const std::function<NoisyValue(double, std::size_t)>& f, double tol,
                                unsigned max_doublings);

struct CurvePoint {
  double rho_bar = 0.0;
  double rho = 0.0;
  ThresholdVerdict verdict = ThresholdVerdict::crossing;
  double ci_low = 0.0, ci_high = 0.0;
};

std::vector<CurvePoint> critical_curve(const CompositeSolution& cp, const CompositeSolution& uniform,
                                       const CouplerPhysics& phys, const std::vector<double>& rho_bar_grid,
                                       const BisectionOptions& opts);

enum class CurveKind { bilinear, polynomial };

struct CurveFit {
  CurveKind kind = CurveKind::bilinear;
  int degree = 1;
  // bilinear: {B, C, D, E}; polynomial: {a0, ..., a_degree}
  std::vector<double> coefficients;
  double max_residual = 0.0;
  double mean_residual = 0.0;

  // rho on the curve at the given rho_bar (NaN where the bilinear curve has
  // no finite solution).
  double evaluate(double rho_bar) const;
};

// Points with verdict != crossing are ignored. Throws std::invalid_argument
// for fewer than 4 usable points or a degenerate design.
CurveFit fit_bilinear_curve(const std::vector<CurvePoint>& points);
CurveFit fit_polynomial_curve(const std::vector<CurvePoint>& points, int degree);

struct ScalingFit {
  double a = 0.0;
  double r_squared = 0.0;
};
// Least squares f(n) = a / n^exponent; r^2 about the mean of the data (NaN
// when all values are equal).
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& n_rho, int exponent);

// sqrt(Tr(bWbW)) / |Tr(bW)| with W = I + rho (J - I). Requires b symmetric
// and semidefinite with Tr(bW) != 0.
double g_factor(const Eigen::MatrixXd& b, double rho);

struct VarianceCheck {
  GridPoint point;
  bool cp_better = false;   // mean_cp >= mean_phy
  bool bound_holds = true;  // std_cp <= sqrt(2)(1 - mean_cp) + 3 se
  bool std_holds = true;    // std_cp <= std_phy + 3 se
};

std::vector<VarianceCheck> variance_theorem_check(const CompositeSolution& cp, const CompositeSolution& uniform,
                                                  CorrelationMode mode, const CouplerPhysics& phys,
                                                  const std::vector<double>& rho_grid,
                                                  const std::vector<double>& sigma_grid, const McOptions& mc,
                                                  std::size_t m = 2);

}  // namespace cpt
