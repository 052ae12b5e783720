#include "cpthreshold/solution_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cpthreshold/errors.hpp"

namespace cpt {

using nlohmann::json;

Unitary2 named_gate(const std::string& name) {
  if (name == "X") return gates::pauli_x();
  if (name == "Y") return gates::pauli_y();
  if (name == "Z") return gates::pauli_z();
  if (name == "I") return Unitary2::identity();
  if (name == "BS50") return gates::balanced_splitter();
  throw ConfigError("unknown gate name '" + name + "'", "/ideal");
}

namespace {

double number_at(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(std::string("missing field '") + key + "'", where + "/" + key);
  if (!it->is_number()) throw ConfigError(std::string("field '") + key + "' must be a number", where + "/" + key);
  return it->get<double>();
}

Unitary2 ideal_from_json(const json& j) {
  if (j.is_string()) return named_gate(j.get<std::string>());
  if (!j.is_array() || j.size() != 4)
    throw ConfigError("ideal must be a gate name or four [re, im] pairs", "/ideal");
  std::array<Complex, 4> e;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& c = j[k];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
      throw ConfigError("ideal entry must be [re, im]", "/ideal/" + std::to_string(k));
    e[k] = {c[0].get<double>(), c[1].get<double>()};
  }
  try {
    return Unitary2::checked(e[0], e[1], e[2], e[3]);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what(), "/ideal");
  }
}

}  // namespace

CompositeSolution solution_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("solution must be a JSON object", "");
  const auto segs = j.find("segments");
  if (segs == j.end()) throw ConfigError("missing field 'segments'", "/segments");
  if (!segs->is_array() || segs->empty())
    throw ConfigError("'segments' must be a non-empty array", "/segments");

  CompositeSolution sol;
  for (std::size_t i = 0; i < segs->size(); ++i) {
    const auto& s = (*segs)[i];
    const std::string where = "/segments/" + std::to_string(i);
    if (!s.is_object()) throw ConfigError("segment must be an object", where);
    sol.segments.push_back(
        {number_at(s, "wa_um", where), number_at(s, "wb_um", where), number_at(s, "z_um", where)});
  }
  const auto ideal = j.find("ideal");
  if (ideal == j.end()) throw ConfigError("missing field 'ideal'", "/ideal");
  sol.ideal = ideal_from_json(*ideal);
  if (ideal->is_string()) sol.ideal_name = ideal->get<std::string>();
  return sol;
}

json solution_to_json(const CompositeSolution& sol) {
  json segs = json::array();
  for (const auto& s : sol.segments) segs.push_back({{"wa_um", s.wa_um}, {"wb_um", s.wb_um}, {"z_um", s.z_um}});
  json out;
  out["segments"] = std::move(segs);
  if (!sol.ideal_name.empty()) {
    out["ideal"] = sol.ideal_name;
  } else {
    json e = json::array();
    for (const auto& c : sol.ideal.entries()) e.push_back({c.real(), c.imag()});
    out["ideal"] = std::move(e);
  }
  return out;
}

CompositeSolution load_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open solution file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what(), "");
  }
  return solution_from_json(j);
}

void save_solution(const CompositeSolution& sol, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write solution file " + path.string());
  out << solution_to_json(sol).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::string solution_id(const CompositeSolution& sol) {
  const std::string text = solution_to_json(sol).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cpt
