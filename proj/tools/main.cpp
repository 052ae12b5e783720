#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cpthreshold/cpthreshold.h"

namespace {

int report(cpt_status s) {
  const std::string field = cpt_last_error_field();
  std::fprintf(stderr, "cpthreshold: %s%s%s\n", cpt_last_error(), field.empty() ? "" : " at ", field.c_str());
  switch (s) {
    case CPT_ERR_CONFIG:
    case CPT_ERR_INVALID_ARGUMENT: return 2;
    case CPT_ERR_NUMERICAL: return 3;
    case CPT_ERR_IO: return 4;
    default: return 1;
  }
}

std::optional<unsigned> env_workers() {
  const char* env = std::getenv("CP_THRESHOLD_WORKERS");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0 || v > 1024) return std::nullopt;
  return static_cast<unsigned>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite-pulse correlation threshold studies"};
  app.set_version_flag("--version", std::string(cpt_version()));
  std::string config, out;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed, samples;
  app.add_option("--config", config, "Study configuration file")->required();
  app.add_option("--out", out, "Output directory (overrides study.output_dir)");
  app.add_option("--workers", workers, "Worker threads; falls back to CP_THRESHOLD_WORKERS")->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", seed, "Seed override");
  app.add_option("--samples", samples, "Monte Carlo samples per point override");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  cpt_study* study = nullptr;
  if (auto s = cpt_study_load(config.c_str(), &study); s != CPT_OK) return report(s);
  auto apply = [&]() -> cpt_status {
    if (!out.empty())
      if (auto s = cpt_study_set_output_dir(study, out.c_str()); s != CPT_OK) return s;
    if (!workers) workers = env_workers();
    if (workers)
      if (auto s = cpt_study_set_workers(study, *workers); s != CPT_OK) return s;
    if (seed)
      if (auto s = cpt_study_set_seed(study, *seed); s != CPT_OK) return s;
    if (samples)
      if (auto s = cpt_study_set_samples(study, *samples); s != CPT_OK) return s;
    return cpt_study_run(study);
  };
  const cpt_status s = apply();
  int rc = 0;
  if (s == CPT_OK || s == CPT_ERR_NUMERICAL) {
    std::printf("%s\n", cpt_study_summary(study));
    for (size_t i = 0; i < cpt_study_flag_count(study); ++i) std::fprintf(stderr, "flag: %s\n", cpt_study_flag(study, i));
    rc = s == CPT_OK ? 0 : 3;
  } else {
    rc = report(s);
  }
  cpt_study_free(study);
  return rc;
}
