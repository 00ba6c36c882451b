#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fkeit {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Streams are addressed, not seeked: key = 64-bit stream seed, counter =
/// (draw index, path index). Two generators built from the same
/// (seed, path index) replay identical sequences on any process or thread,
/// which is the reproducibility contract of the whole engine.
class Philox {
 public:
  Philox(std::uint64_t stream_seed, std::uint64_t path_index)
      : key0_(static_cast<std::uint32_t>(stream_seed)),
        key1_(static_cast<std::uint32_t>(stream_seed >> 32)),
        path_lo_(static_cast<std::uint32_t>(path_index)),
        path_hi_(static_cast<std::uint32_t>(path_index >> 32)) {}

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) {
      generate_block();
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  /// Uniform on (0,1), never returns 0 or 1.
  double next_uniform() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    std::uint64_t bits = (hi << 21) ^ (lo >> 11);  // 53 random bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; pairs are cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
  }

  void generate_block() {
    constexpr std::uint32_t kWeylA = 0x9E3779B9u, kWeylB = 0xBB67AE85u;
    constexpr std::uint32_t kMulA = 0xD2511F53u, kMulB = 0xCD9E8D57u;
    std::uint32_t c0 = draw_lo_, c1 = draw_hi_, c2 = path_lo_, c3 = path_hi_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mul_hilo(kMulA, c0, lo0, hi0);
      mul_hilo(kMulB, c2, lo1, hi1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kWeylA;
      k1 += kWeylB;
    }
    buf_[0] = c0; buf_[1] = c1; buf_[2] = c2; buf_[3] = c3;
    if (++draw_lo_ == 0) ++draw_hi_;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t path_lo_, path_hi_;
  std::uint32_t draw_lo_ = 0, draw_hi_ = 0;
  std::uint32_t buf_[4]{};
  int buf_pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

/// splitmix64 mix; used to derive realization seeds and stream ids from the
/// master seed without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace fkeit
