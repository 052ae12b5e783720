#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cpthreshold/coupler.hpp"

namespace cpt {

// Solution file format:
//   {
//     "segments": [ {"wa_um": 0.4125, "wb_um": 0.4685, "z_um": 22.5835}, ... ],
//     "ideal": "X"                                   // named gate, or
//     "ideal": [[re, im], [re, im], [re, im], [re, im]]   // row-major entries
//   }
// Unknown top-level keys ("name", "source", ...) are ignored.

// Throws ConfigError with a JSON pointer in field() on malformed input.
CompositeSolution solution_from_json(const nlohmann::json& j);
nlohmann::json solution_to_json(const CompositeSolution& sol);

// Throws IoError when the file cannot be read, ConfigError when malformed.
CompositeSolution load_solution(const std::filesystem::path& path);
void save_solution(const CompositeSolution& sol, const std::filesystem::path& path);

// Named gates understood in "ideal": X, Y, Z, I, BS50. Throws ConfigError.
Unitary2 named_gate(const std::string& name);

// 16 hex digits of a 64-bit FNV-1a hash over the canonical serialization.
std::string solution_id(const CompositeSolution& sol);

}  // namespace cpt
