#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsopt {

// Counter-based splittable random stream. Each draw is a pure function of
// (key, counter); the key is derived from (seed, stream_id) and refined by
// substream(i). A draw is therefore pinned by (seed, stream path, draw index)
// alone, which keeps results independent of worker scheduling: give sample k
// its own substream(k) and evaluate in any order.
//
// Copying the stream and replaying yields bit-identical draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : k0_(mix64(seed + 0x9e3779b97f4a7c15ull)),
        k1_(mix64(stream_id ^ 0xbf58476d1ce4e5b9ull)),
        counter_(0) {}

  // Independent stream keyed by (this stream's key, i); counter restarts at 0.
  // Depends only on the key, not on how many draws this stream has made.
  RngStream substream(std::uint64_t i) const {
    RngStream s(*this);
    s.k0_ = mix64(k0_ + 0x94d049bb133111ebull * (i + 1));
    s.k1_ = mix64(k1_ ^ mix64(i + 0x2545f4914f6cdd1dull));
    s.counter_ = 0;
    return s;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = mix64(counter_++ + k0_);
    return mix64(z ^ k1_);
  }

  // Uniform on (0,1]; never zero, so log(u) is safe.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
  }

  // Uniform on [0,1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal; consumes exactly two uniforms (Box-Muller, cosine
  // branch only) so the draw-index bookkeeping stays trivial.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, n); Lemire multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t k0_;
  std::uint64_t k1_;
  std::uint64_t counter_;
};

}  // namespace rsopt
