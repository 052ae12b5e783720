#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpthreshold/study_config.hpp"
#include "cpthreshold/threshold.hpp"

namespace cpt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

struct StudyOutcome {
  int exit_code = kExitOk;  // kExitOk or kExitNumerical
  std::string summary;      // one line
  std::vector<std::string> flags;
  std::vector<std::filesystem::path> files;
  nlohmann::json results;  // content of results.json
};

// Runs the configured study and writes results.json plus CSV point files
// into cfg.output_dir. Throws ConfigError or IoError.
StudyOutcome run_study(const StudyConfig& cfg);

const char* tool_version();

// JSON views of the analysis types, shared by the CLI and the tests.
nlohmann::json to_json(const PairedStats& p);
nlohmann::json to_json(const FidelityStats& s);
nlohmann::json to_json(const SeriesCoefficients& c);
nlohmann::json to_json(const ThresholdResult& r);
nlohmann::json to_json(const CurveFit& f);

}  // namespace cpt
