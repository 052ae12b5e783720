#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpthreshold/coupler.hpp"
#include "cpthreshold/error_model.hpp"
#include "cpthreshold/optimizer.hpp"

namespace cpt {

enum class StudyKind { sweep_rho, sweep_rho_bar, curve, coefficients, scaling_n, variance_theorem, optimize };

std::string to_string(StudyKind k);
StudyKind study_kind_from_string(const std::string& s);  // throws ConfigError

// Resolved study configuration. Paths are absolute after loading.
struct StudyConfig {
  StudyKind kind = StudyKind::coefficients;
  std::uint64_t seed = 0;
  std::size_t samples = 20000;
  std::filesystem::path output_dir;
  unsigned workers = 1;  // never part of recorded output

  CouplerPhysics physics;

  std::filesystem::path solution_path;           // composite solution (all but optimize / scaling_n)
  std::optional<std::filesystem::path> uniform_path;  // default: full-transfer coupler
  double uniform_width_um = 0.45;

  CorrelationMode mode = CorrelationMode::segments;
  bool length_errors = false;
  double sigma_um = 0.00667;
  std::vector<double> sigma_grid{0.002, 0.004, 0.00667, 0.008};
  // Coefficient grid for the waveguides and general modes.
  std::vector<double> waveguides_sigma_grid{0.001, 0.002, 0.003, 0.004};
  double max_sigma_um = 0.01;
  double rho = 1.0;
  double rho_bar = 1.0;
  std::vector<double> rho_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> rho_bar_grid{0.0, 0.25, 0.5, 0.75, 1.0};

  double tol = 0.01;
  unsigned max_doublings = 3;
  int curve_degree = 3;

  OptimizerConfig optimizer;
  std::string ideal = "X";
  std::vector<std::size_t> n_list{3, 4, 5, 6};
  std::optional<std::filesystem::path> refine_from;

  // Everything that influences results (workers excluded).
  nlohmann::json to_json() const;
};

// INI-style file:
//
//   [study]     kind, seed, samples, output_dir
//   [physics]   beta1, w_ref, kappa0, eta            (all required)
//   [solution]  path, uniform, uniform_width_um
//   [errors]    mode, length_errors, sigma_um, sigma_grid_um,
//               waveguides_sigma_grid_um, max_sigma_um, rho, rho_bar,
//               rho_grid, rho_bar_grid
//   [threshold] tol, max_doublings, curve_degree
//   [optimizer] ideal, n_segments, n_list, restarts, max_evals,
//               objective_samples, sigma_um, width_lo_um, width_hi_um,
//               length_lo_um, length_hi_um, refine_from
//
// Lists are comma separated. Relative paths resolve against the config
// file's directory. Throws ConfigError (field = "section.key") or IoError.
StudyConfig load_study_config(const std::filesystem::path& path);
StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace cpt
