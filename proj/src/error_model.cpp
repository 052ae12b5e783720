#include "cpthreshold/error_model.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cpthreshold/errors.hpp"

namespace cpt {

std::string to_string(CorrelationMode mode) {
  switch (mode) {
    case CorrelationMode::segments: return "segments";
    case CorrelationMode::waveguides: return "waveguides";
    case CorrelationMode::general: return "general";
  }
  return "general";
}

CorrelationMode correlation_mode_from_string(const std::string& s) {
  if (s == "segments") return CorrelationMode::segments;
  if (s == "waveguides") return CorrelationMode::waveguides;
  if (s == "general") return CorrelationMode::general;
  throw ConfigError("unknown correlation mode '" + s + "'", "mode");
}

void CorrelationSpec::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (!(rho_bar >= 0.0 && rho_bar <= 1.0)) throw std::invalid_argument("rho_bar must lie in [0, 1]");
  if (!(sigma_um >= 0.0) || !std::isfinite(sigma_um)) throw std::invalid_argument("sigma must be >= 0");
  if (n < 1 || m < 1) throw std::invalid_argument("n and m must be at least 1");
}

std::string CovarianceMatrix::layout() const {
  std::ostringstream os;
  os << std::setprecision(17) << "segment-major index=i*m+a n=" << n << " m=" << m;
  if (structured)
    os << " mode=" << to_string(mode) << " sigma_um=" << sigma_um
       << " segment_correlation=" << segment_correlation
       << " variable_correlation=" << variable_correlation;
  return os.str();
}

CovarianceMatrix CovarianceMatrix::from_dense(Eigen::MatrixXd entries, std::size_t m) {
  if (entries.rows() != entries.cols() || entries.rows() == 0)
    throw std::invalid_argument("covariance must be a non-empty square matrix");
  if (m == 0 || entries.rows() % static_cast<Eigen::Index>(m) != 0)
    throw std::invalid_argument("dimension is not a multiple of m");
  CovarianceMatrix c;
  c.m = m;
  c.n = static_cast<std::size_t>(entries.rows()) / m;
  c.sigma_um = std::sqrt(std::max(0.0, entries.diagonal().maxCoeff()));
  c.entries = std::move(entries);
  return c;
}

namespace {

// Orthonormal eigenvectors of A_k(r) = (1-r) I + r 1 1^T, independent of r:
// column 0 is 1/sqrt(k) (eigenvalue 1 + (k-1) r), columns 1..k-1 are Helmert
// contrasts (eigenvalue 1 - r).
Eigen::MatrixXd helmert_basis(std::size_t k) {
  const auto K = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(K, K);
  v.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
  for (Eigen::Index c = 1; c < K; ++c) {
    const double norm = std::sqrt(static_cast<double>(c * (c + 1)));
    for (Eigen::Index r = 0; r < c; ++r) v(r, c) = 1.0 / norm;
    v(c, c) = -static_cast<double>(c) / norm;
  }
  return v;
}

Eigen::VectorXd compound_eigenvalues(std::size_t k, double r) {
  Eigen::VectorXd lam = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 - r);
  lam(0) = 1.0 + (static_cast<double>(k) - 1.0) * r;
  return lam;
}

Eigen::MatrixXd structured_factor(const CovarianceMatrix& cov) {
  const Eigen::MatrixXd vn = helmert_basis(cov.n);
  const Eigen::MatrixXd vm = helmert_basis(cov.m);
  const Eigen::VectorXd ln = compound_eigenvalues(cov.n, cov.segment_correlation);
  const Eigen::VectorXd lm = compound_eigenvalues(cov.m, cov.variable_correlation);
  const auto N = static_cast<Eigen::Index>(cov.n);
  const auto M = static_cast<Eigen::Index>(cov.m);
  Eigen::MatrixXd l(N * M, N * M);
  const double s2 = cov.sigma_um * cov.sigma_um;
  for (Eigen::Index p = 0; p < N; ++p)
    for (Eigen::Index q = 0; q < M; ++q) {
      const double scale = std::sqrt(std::max(0.0, s2 * ln(p) * lm(q)));
      const Eigen::Index col = p * M + q;
      for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index a = 0; a < M; ++a) l(i * M + a, col) = vn(i, p) * vm(a, q) * scale;
    }
  return l;
}

Eigen::MatrixXd numeric_factor(const CovarianceMatrix& cov) {
  const Eigen::MatrixXd& c = cov.entries;
  const double scale = c.diagonal().cwiseAbs().maxCoeff();
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(scale, 1e-300) && scale > 0.0)
    throw std::domain_error("covariance matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw std::domain_error("eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  const double floor = -1e-10 * scale;
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    if (lam(k) < floor)
      throw std::domain_error("covariance has a negative eigenvalue " + std::to_string(lam(k)));
    lam(k) = std::sqrt(std::max(0.0, lam(k)));
  }
  return es.eigenvectors() * lam.asDiagonal();
}

}  // namespace

CovarianceMatrix build_covariance(const CorrelationSpec& spec, CorrelationMode mode) {
  spec.validate();
  CovarianceMatrix cov;
  cov.n = spec.n;
  cov.m = spec.m;
  cov.sigma_um = spec.sigma_um;
  cov.mode = mode;
  cov.structured = true;
  switch (mode) {
    case CorrelationMode::segments:
      cov.segment_correlation = spec.rho;
      cov.variable_correlation = 1.0;
      break;
    case CorrelationMode::waveguides:
      cov.segment_correlation = 1.0;
      cov.variable_correlation = spec.rho_bar;
      break;
    case CorrelationMode::general:
      cov.segment_correlation = spec.rho;
      cov.variable_correlation = spec.rho_bar;
      break;
  }
  const auto N = static_cast<Eigen::Index>(spec.n);
  const auto M = static_cast<Eigen::Index>(spec.m);
  const double s2 = spec.sigma_um * spec.sigma_um;
  cov.entries.resize(N * M, N * M);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index a = 0; a < M; ++a)
      for (Eigen::Index j = 0; j < N; ++j)
        for (Eigen::Index b = 0; b < M; ++b) {
          const double seg = i == j ? 1.0 : cov.segment_correlation;
          const double var = a == b ? 1.0 : cov.variable_correlation;
          cov.entries(i * M + a, j * M + b) = s2 * seg * var;
        }
  return cov;
}

Eigen::MatrixXd psd_factor(const CovarianceMatrix& cov, FactorMethod method) {
  if (cov.dim() == 0) throw std::invalid_argument("empty covariance");
  if (cov.structured && method == FactorMethod::automatic) return structured_factor(cov);
  return numeric_factor(cov);
}

ErrorSampler::ErrorSampler(const CovarianceMatrix& cov, std::uint64_t seed)
    : ErrorSampler(psd_factor(cov), seed) {}

ErrorSampler::ErrorSampler(Eigen::MatrixXd factor, std::uint64_t seed)
    : factor_(std::move(factor)), seed_(seed), normals_(seed) {}

void ErrorSampler::draw(std::uint64_t index, std::span<double> out, std::span<double> scratch) const {
  const std::size_t d = dim();
  normals_.fill(index, scratch, d);
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c)
      acc += factor_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * scratch[c];
    out[r] = acc;
  }
}

std::vector<std::vector<double>> sample_errors(const CovarianceMatrix& cov, std::size_t count,
                                               std::uint64_t seed, std::uint64_t first) {
  if (count == 0) throw std::invalid_argument("sample count must be at least 1");
  const ErrorSampler sampler(cov, seed);
  std::vector<double> scratch(sampler.dim());
  std::vector<std::vector<double>> out(count, std::vector<double>(sampler.dim()));
  for (std::size_t k = 0; k < count; ++k) sampler.draw(first + k, out[k], scratch);
  return out;
}

void write_covariance_csv(std::ostream& out, const CovarianceMatrix& cov) {
  out << "# layout: " << cov.layout() << '\n';
  out << "index";
  for (std::size_t c = 0; c < cov.dim(); ++c) out << ",c" << c;
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < cov.dim(); ++r) {
    out << r;
    for (std::size_t c = 0; c < cov.dim(); ++c)
      out << ',' << cov.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    out << '\n';
  }
}

}  // namespace cpt
