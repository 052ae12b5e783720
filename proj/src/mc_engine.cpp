#include "cpthreshold/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cpt {

namespace {

// Fixed number of batches; block boundaries depend only on the sample count,
// which keeps every reduction independent of how blocks map to workers.
constexpr std::size_t kBatches = 32;

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct BlockResult {
  Moments cp, uni, diff;
  std::size_t rejected = 0;
};

template <class Fn>
std::vector<BlockResult> run_blocks(std::size_t samples, unsigned workers, Fn&& block_fn) {
  const std::size_t blocks = std::min(kBatches, samples);
  const std::size_t per = (samples + blocks - 1) / blocks;
  std::vector<BlockResult> results(blocks);
  auto work = [&](unsigned w, unsigned stride) {
    for (std::size_t b = w; b < blocks; b += stride) {
      const std::size_t first = b * per;
      const std::size_t last = std::min(samples, first + per);
      if (first < last) results[b] = block_fn(first, last);
    }
  };
  const unsigned nw = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(blocks)));
  if (nw == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (unsigned w = 0; w < nw; ++w) pool.emplace_back(work, w, nw);
    for (auto& t : pool) t.join();
  }
  return results;
}

FidelityStats finish(const Moments& m, std::size_t samples, std::size_t rejected, std::uint64_t seed) {
  FidelityStats s;
  s.samples = samples;
  s.rejected = rejected;
  s.accepted = m.n;
  s.seed = seed;
  s.mean = m.mean;
  s.std = std::sqrt(m.variance());
  const double n = static_cast<double>(std::max<std::size_t>(m.n, 1));
  s.stderr_mean = s.std / std::sqrt(n);
  s.stderr_std = s.std / std::sqrt(2.0 * n);
  return s;
}

void check_spec(const CompositeSolution& sol, const CorrelationSpec& spec, std::size_t samples) {
  spec.validate();
  if (samples < 100) throw std::invalid_argument("at least 100 samples are required");
  if (spec.n != sol.size())
    throw std::invalid_argument("correlation spec has n=" + std::to_string(spec.n) + " but solution has " +
                                std::to_string(sol.size()) + " segments");
  if (spec.m != 2 && spec.m != 3)
    throw std::invalid_argument("coupler errors need m=2 (widths) or m=3 (widths and length)");
}

}  // namespace

bool FidelityStats::unreliable() const {
  return samples > 0 && static_cast<double>(rejected) > 0.001 * static_cast<double>(samples);
}

bool PairedStats::unreliable() const {
  return samples > 0 && static_cast<double>(rejected) > 0.001 * static_cast<double>(samples);
}

FidelityStats fidelity_stats(const CompositeSolution& sol, const CorrelationSpec& spec,
                             CorrelationMode mode, const CouplerPhysics& phys, const McOptions& opts) {
  check_spec(sol, spec, opts.samples);
  const ErrorSampler sampler(build_covariance(spec, mode), opts.seed);
  const auto blocks = run_blocks(opts.samples, opts.workers, [&](std::size_t first, std::size_t last) {
    BlockResult r;
    std::vector<double> eps(sampler.dim()), scratch(sampler.dim());
    for (std::size_t k = first; k < last; ++k) {
      sampler.draw(k, eps, scratch);
      const auto u = try_composite_unitary(sol, eps, spec.m, phys);
      if (!u) {
        ++r.rejected;
        continue;
      }
      r.cp.add(gate_fidelity(sol.ideal, *u));
    }
    return r;
  });
  Moments total;
  std::size_t rejected = 0;
  for (const auto& b : blocks) {
    total.merge(b.cp);
    rejected += b.rejected;
  }
  return finish(total, opts.samples, rejected, opts.seed);
}

PairedStats paired_fidelity_diff(const CompositeSolution& cp, const CompositeSolution& uniform,
                                 const CorrelationSpec& spec, CorrelationMode mode,
                                 const CouplerPhysics& phys, const McOptions& opts) {
  check_spec(cp, spec, opts.samples);
  if (uniform.size() != 1) throw std::invalid_argument("uniform coupler must have exactly one segment");
  const ErrorSampler sampler(build_covariance(spec, mode), opts.seed);
  const auto blocks = run_blocks(opts.samples, opts.workers, [&](std::size_t first, std::size_t last) {
    BlockResult r;
    std::vector<double> eps(sampler.dim()), scratch(sampler.dim());
    for (std::size_t k = first; k < last; ++k) {
      sampler.draw(k, eps, scratch);
      const auto ucp = try_composite_unitary(cp, eps, spec.m, phys);
      const auto uph = try_composite_unitary(uniform, eps, spec.m, phys);
      if (!ucp || !uph) {
        ++r.rejected;
        continue;
      }
      const double fcp = gate_fidelity(cp.ideal, *ucp);
      const double fph = gate_fidelity(uniform.ideal, *uph);
      r.cp.add(fcp);
      r.uni.add(fph);
      r.diff.add(fcp - fph);
    }
    return r;
  });

  Moments cp_m, uni_m, diff_m;
  std::size_t rejected = 0;
  Moments gap_batches;
  for (const auto& b : blocks) {
    cp_m.merge(b.cp);
    uni_m.merge(b.uni);
    diff_m.merge(b.diff);
    rejected += b.rejected;
    if (b.cp.n > 1) gap_batches.add(std::sqrt(b.cp.variance()) - std::sqrt(b.uni.variance()));
  }
  PairedStats p;
  for (const auto& b : blocks) {
    p.batch_mean_cp.push_back(b.cp.mean);
    p.batch_mean_uniform.push_back(b.uni.mean);
    p.batch_count.push_back(b.cp.n);
  }
  p.cp = finish(cp_m, opts.samples, rejected, opts.seed);
  p.uniform = finish(uni_m, opts.samples, rejected, opts.seed);
  const auto d = finish(diff_m, opts.samples, rejected, opts.seed);
  p.mean_diff = d.mean;
  p.std_diff = d.std;
  p.stderr_diff = d.stderr_mean;
  p.std_gap = p.cp.std - p.uniform.std;
  // Standard error of the mean batch gap stands in for that of the full-sample gap.
  p.stderr_std_gap = gap_batches.n > 1 ? std::sqrt(gap_batches.variance() / static_cast<double>(gap_batches.n))
                                       : std::hypot(p.cp.stderr_std, p.uniform.stderr_std);
  p.samples = opts.samples;
  p.rejected = rejected;
  p.seed = opts.seed;
  return p;
}

unsigned workers_from_env(unsigned fallback) {
  const char* env = std::getenv("CP_THRESHOLD_WORKERS");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 1024) return fallback;
  return static_cast<unsigned>(v);
}

}  // namespace cpt
