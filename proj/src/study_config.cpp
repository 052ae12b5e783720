#include "cpthreshold/study_config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cpthreshold/errors.hpp"

namespace cpt {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

constexpr const char* kStudyNames[] = {"sweep_rho", "sweep_rho_bar", "curve", "coefficients",
                                       "scaling_n", "variance_theorem", "optimize"};

// Known keys per section; anything else is rejected so typos surface.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"study", {"kind", "seed", "samples", "output_dir"}},
      {"physics", {"beta1", "w_ref", "kappa0", "eta"}},
      {"solution", {"path", "uniform", "uniform_width_um"}},
      {"errors",
       {"mode", "length_errors", "sigma_um", "sigma_grid_um", "waveguides_sigma_grid_um", "max_sigma_um", "rho", "rho_bar", "rho_grid",
        "rho_bar_grid"}},
      {"threshold", {"tol", "max_doublings", "curve_degree"}},
      {"optimizer",
       {"ideal", "n_segments", "n_list", "restarts", "max_evals", "objective_samples", "sigma_um", "width_lo_um",
        "width_hi_um", "length_lo_um", "length_hi_um", "refine_from"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, fs::path base) : tree_(tree), base_(std::move(base)) {}

  std::optional<std::string> raw(const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  std::string require(const std::string& key) const {
    auto v = raw(key);
    if (!v || v->empty()) throw ConfigError("missing required key '" + key + "'", key);
    return *v;
  }

  template <class T>
  static T parse_number(const std::string& text, const std::string& key) {
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ConfigError("'" + text + "' is not a valid number", key);
    return value;
  }

  template <class T>
  void number(const std::string& key, T& out) const {
    if (auto v = raw(key)) out = parse_number<T>(*v, key);
  }

  template <class T>
  void required_number(const std::string& key, T& out) const {
    out = parse_number<T>(require(key), key);
  }

  template <class T>
  void list(const std::string& key, std::vector<T>& out) const {
    auto v = raw(key);
    if (!v) return;
    std::vector<std::string> parts;
    boost::algorithm::split(parts, *v, boost::algorithm::is_any_of(","));
    out.clear();
    for (auto& p : parts) {
      boost::algorithm::trim(p);
      if (p.empty()) throw ConfigError("empty element in list", key);
      out.push_back(parse_number<T>(p, key));
    }
    if (out.empty()) throw ConfigError("list must not be empty", key);
  }

  void flag(const std::string& key, bool& out) const {
    auto v = raw(key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      throw ConfigError("expected true or false", key);
    }
  }

  fs::path path(const std::string& text) const {
    fs::path p(text);
    if (p.is_relative()) p = base_ / p;
    return p.lexically_normal();
  }

 private:
  const pt::ptree& tree_;
  fs::path base_;
};

void check_keys(const pt::ptree& tree) {
  const auto& known = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError("unknown section [" + section + "]", section);
    for (const auto& [key, value] : body)
      if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "'", section + "." + key);
  }
}

void require_unit_interval(const std::vector<double>& v, const std::string& key) {
  for (double x : v)
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("values must lie in [0, 1]", key);
}

}  // namespace

std::string to_string(StudyKind k) { return kStudyNames[static_cast<int>(k)]; }

StudyKind study_kind_from_string(const std::string& s) {
  for (int i = 0; i < 7; ++i)
    if (s == kStudyNames[i]) return static_cast<StudyKind>(i);
  throw ConfigError("unknown study kind '" + s + "'", "study.kind");
}

StudyConfig parse_study_config(const std::string& text, const fs::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")",
                      "line " + std::to_string(e.line()));
  }
  check_keys(tree);
  const Reader r(tree, base_dir);

  StudyConfig c;
  c.kind = study_kind_from_string(r.require("study.kind"));
  r.required_number("study.seed", c.seed);
  r.number("study.samples", c.samples);
  if (c.samples < 100) throw ConfigError("samples must be at least 100", "study.samples");
  if (auto v = r.raw("study.output_dir")) c.output_dir = r.path(*v);

  r.required_number("physics.beta1", c.physics.beta1);
  r.required_number("physics.w_ref", c.physics.w_ref);
  r.required_number("physics.kappa0", c.physics.kappa0);
  r.required_number("physics.eta", c.physics.eta);
  c.physics.validate();

  const bool needs_solution = c.kind != StudyKind::scaling_n && c.kind != StudyKind::optimize;
  if (needs_solution) {
    c.solution_path = r.path(r.require("solution.path"));
  } else if (auto v = r.raw("solution.path")) {
    c.solution_path = r.path(*v);
  }
  if (auto v = r.raw("solution.uniform")) c.uniform_path = r.path(*v);
  r.number("solution.uniform_width_um", c.uniform_width_um);
  if (!(c.uniform_width_um > 0.0)) throw ConfigError("uniform width must be positive", "solution.uniform_width_um");
  for (const auto& p : {c.solution_path, c.uniform_path.value_or(fs::path{})})
    if (!p.empty() && !fs::exists(p)) throw ConfigError("file not found: " + p.string(), "solution");

  if (auto v = r.raw("errors.mode")) {
    try {
      c.mode = correlation_mode_from_string(*v);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), "errors.mode");
    }
  }
  r.flag("errors.length_errors", c.length_errors);
  r.number("errors.sigma_um", c.sigma_um);
  r.list("errors.sigma_grid_um", c.sigma_grid);
  r.list("errors.waveguides_sigma_grid_um", c.waveguides_sigma_grid);
  r.number("errors.max_sigma_um", c.max_sigma_um);
  r.number("errors.rho", c.rho);
  r.number("errors.rho_bar", c.rho_bar);
  r.list("errors.rho_grid", c.rho_grid);
  r.list("errors.rho_bar_grid", c.rho_bar_grid);
  if (!(c.sigma_um >= 0.0)) throw ConfigError("sigma must be non-negative", "errors.sigma_um");
  for (double s : c.sigma_grid)
    if (!(s >= 0.0)) throw ConfigError("sigma values must be non-negative", "errors.sigma_grid_um");
  for (double s : c.waveguides_sigma_grid)
    if (!(s >= 0.0)) throw ConfigError("sigma values must be non-negative", "errors.waveguides_sigma_grid_um");
  require_unit_interval({c.rho}, "errors.rho");
  require_unit_interval({c.rho_bar}, "errors.rho_bar");
  require_unit_interval(c.rho_grid, "errors.rho_grid");
  require_unit_interval(c.rho_bar_grid, "errors.rho_bar_grid");

  r.number("threshold.tol", c.tol);
  r.number("threshold.max_doublings", c.max_doublings);
  r.number("threshold.curve_degree", c.curve_degree);
  if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("tol must lie in (0, 1)", "threshold.tol");
  if (c.max_doublings > 6) throw ConfigError("max_doublings must be at most 6", "threshold.max_doublings");
  if (c.curve_degree < 1 || c.curve_degree > 6) throw ConfigError("curve_degree must lie in [1, 6]", "threshold.curve_degree");

  auto& o = c.optimizer;
  if (auto v = r.raw("optimizer.ideal")) c.ideal = *v;
  r.number("optimizer.n_segments", o.n_segments);
  r.list("optimizer.n_list", c.n_list);
  r.number("optimizer.restarts", o.restarts);
  r.number("optimizer.max_evals", o.max_evals);
  r.number("optimizer.objective_samples", o.objective_samples);
  r.number("optimizer.sigma_um", o.sigma_objective_um);
  r.number("optimizer.width_lo_um", o.width_bounds.lo);
  r.number("optimizer.width_hi_um", o.width_bounds.hi);
  r.number("optimizer.length_lo_um", o.length_lo_um);
  r.number("optimizer.length_hi_um", o.length_hi_um);
  if (auto v = r.raw("optimizer.refine_from")) {
    c.refine_from = r.path(*v);
    if (!fs::exists(*c.refine_from)) throw ConfigError("file not found: " + c.refine_from->string(), "optimizer.refine_from");
  }
  o.seed = c.seed;
  o.validate();
  for (auto n : c.n_list)
    if (n < 1) throw ConfigError("n_list entries must be at least 1", "optimizer.n_list");
  return c;
}

StudyConfig load_study_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_study_config(ss.str(), fs::absolute(path).parent_path());
}

nlohmann::json StudyConfig::to_json() const {
  using nlohmann::json;
  json j;
  j["study"] = {{"kind", to_string(kind)}, {"seed", seed}, {"samples", samples}};
  j["physics"] = {{"beta1", physics.beta1}, {"w_ref", physics.w_ref}, {"kappa0", physics.kappa0}, {"eta", physics.eta}};
  j["solution"] = {{"path", solution_path.empty() ? json(nullptr) : json(solution_path.filename().string())},
                   {"uniform", uniform_path ? json(uniform_path->filename().string()) : json("full_transfer")},
                   {"uniform_width_um", uniform_width_um}};
  j["errors"] = {{"mode", to_string(mode)},   {"length_errors", length_errors}, {"sigma_um", sigma_um},
                 {"sigma_grid_um", sigma_grid}, {"waveguides_sigma_grid_um", waveguides_sigma_grid},
                 {"max_sigma_um", max_sigma_um},  {"rho", rho},
                 {"rho_bar", rho_bar},          {"rho_grid", rho_grid},          {"rho_bar_grid", rho_bar_grid}};
  j["threshold"] = {{"tol", tol}, {"max_doublings", max_doublings}, {"curve_degree", curve_degree}};
  j["optimizer"] = {{"ideal", ideal},
                    {"n_segments", optimizer.n_segments},
                    {"n_list", n_list},
                    {"restarts", optimizer.restarts},
                    {"max_evals", optimizer.max_evals},
                    {"objective_samples", optimizer.objective_samples},
                    {"sigma_um", optimizer.sigma_objective_um},
                    {"width_bounds_um", {optimizer.width_bounds.lo, optimizer.width_bounds.hi}},
                    {"length_bounds_um", {optimizer.length_lo_um, optimizer.length_hi_um}},
                    {"refine_from", refine_from ? json(refine_from->filename().string()) : json(nullptr)}};
  return j;
}

}  // namespace cpt
