#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mgmrf {

// Philox 4x32-10 counter-based generator. Output is a pure function of
// (seed, stream, counter), so draws are reproducible across platforms and
// independent streams come from distinct stream ids, not from seed jumping.
class PhiloxRng {
 public:
  explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) {
      buf_ = block(ctr_, key_);
      advance_counter();
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  // Uniform on (0,1), never exactly 0 or 1.
  double uniform() { return (static_cast<double>(next_u32()) + 0.5) * 0x1p-32; }

  // Standard normal via Box-Muller; second member of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> c,
                                            std::array<std::uint32_t, 2> k) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c[0];
      std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c[2];
      std::array<std::uint32_t, 4> n;
      n[0] = static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0];
      n[1] = static_cast<std::uint32_t>(p1);
      n[2] = static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1];
      n[3] = static_cast<std::uint32_t>(p0);
      c = n;
      k[0] += w0;
      k[1] += w1;
    }
    return c;
  }

  void advance_counter() {
    if (++ctr_[0] == 0) ++ctr_[1];
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mgmrf
