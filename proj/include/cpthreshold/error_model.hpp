#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpthreshold/rng.hpp"

namespace cpt {

enum class CorrelationMode {
  segments,    // within-segment variables fully correlated, segments share rho
  waveguides,  // segments fully correlated, within-segment variables share rho_bar
  general,     // both
};

std::string to_string(CorrelationMode mode);
CorrelationMode correlation_mode_from_string(const std::string& s);  // throws ConfigError

struct CorrelationSpec {
  double sigma_um = 0.0;
  double rho = 0.0;      // between segments
  double rho_bar = 0.0;  // between the variables of one segment
  std::size_t n = 1;     // segments
  std::size_t m = 2;     // variables per segment

  void validate() const;  // throws std::invalid_argument
};

// Covariance over n*m error variables, segment-major: index = i*m + a.
//
// All three modes are Kronecker products
//     sigma^2 * A_n(r_seg) (x) A_m(r_var),   A_k(r) = (1 - r) I_k + r 1 1^T,
// with (r_seg, r_var) = (rho, 1) for segments, (1, rho_bar) for waveguides and
// (rho, rho_bar) for general. The structure is kept alongside the dense
// entries for the closed-form factor.
struct CovarianceMatrix {
  Eigen::MatrixXd entries;
  std::size_t n = 0;
  std::size_t m = 0;
  double sigma_um = 0.0;
  CorrelationMode mode = CorrelationMode::general;
  double segment_correlation = 0.0;
  double variable_correlation = 0.0;
  bool structured = false;

  std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
  std::string layout() const;

  // Wraps an arbitrary symmetric matrix (numeric factor path).
  static CovarianceMatrix from_dense(Eigen::MatrixXd entries, std::size_t m = 1);
};

// Throws std::invalid_argument for correlations outside [0, 1], sigma < 0,
// n or m zero.
CovarianceMatrix build_covariance(const CorrelationSpec& spec, CorrelationMode mode);

enum class FactorMethod { automatic, numeric };

// L with L L^T = cov. Structured covariances use the analytic eigenbasis, so L
// varies continuously with the correlation parameters (common random numbers
// stay aligned across a rho sweep). Otherwise a symmetric eigensolver is used
// with eigenvalues in [-1e-10 sigma^2, 0) clamped to zero. Throws
// std::domain_error for more negative eigenvalues.
Eigen::MatrixXd psd_factor(const CovarianceMatrix& cov, FactorMethod method = FactorMethod::automatic);

// Correlated Gaussian error vectors L g, g drawn from a counter-based
// generator keyed on (seed, sample index).
class ErrorSampler {
 public:
  ErrorSampler(const CovarianceMatrix& cov, std::uint64_t seed);
  ErrorSampler(Eigen::MatrixXd factor, std::uint64_t seed);

  std::size_t dim() const { return static_cast<std::size_t>(factor_.rows()); }
  std::uint64_t seed() const { return seed_; }

  // out.size() must equal dim(). `scratch` needs dim() doubles as well.
  void draw(std::uint64_t index, std::span<double> out, std::span<double> scratch) const;

 private:
  Eigen::MatrixXd factor_;
  std::uint64_t seed_;
  NormalStream normals_;
};

// Samples [first, first + count) of the stream. Throws std::invalid_argument
// when count is zero.
std::vector<std::vector<double>> sample_errors(const CovarianceMatrix& cov, std::size_t count,
                                               std::uint64_t seed, std::uint64_t first = 0);

// CSV dump: a "# layout ..." comment line, a header row, then one row per index.
void write_covariance_csv(std::ostream& out, const CovarianceMatrix& cov);

}  // namespace cpt
