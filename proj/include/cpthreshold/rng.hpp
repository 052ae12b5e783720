#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cpt {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: every output block is a
// pure function of (key, counter), so a stream can be addressed at any sample
// index without generating the prefix.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, k);
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Block single_round(const Block& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  std::array<std::uint32_t, 2> key_;
};

// Standard normal variates addressed by (sample index, variate index).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : philox_(seed) {}

  // Fills out[0..count) with the normals of sample `index`.
  template <class Out>
  void fill(std::uint64_t index, Out& out, std::size_t count) const {
    for (std::size_t j = 0; j < count; j += 2) {
      const auto blk = philox_({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                static_cast<std::uint32_t>(j / 2), 0u});
      const std::uint64_t a = (std::uint64_t{blk[0]} << 32) | blk[1];
      const std::uint64_t b = (std::uint64_t{blk[2]} << 32) | blk[3];
      // u1 in (0, 1], u2 in [0, 1)
      const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
      const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double t = 2.0 * std::numbers::pi * u2;
      out[j] = r * std::cos(t);
      if (j + 1 < count) out[j + 1] = r * std::sin(t);
    }
  }

 private:
  Philox4x32 philox_;
};

}  // namespace cpt
