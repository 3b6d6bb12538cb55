#pragma once

#include <cmath>
#include <cstdint>

namespace pathnet {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
  z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
  return z ^ (z >> 33);
}
}  // namespace detail

// Counter-based splittable generator (SplitMix64 core). Substreams are
// derived from the root seed, never from generator state, so the stream
// for (seed, task) yields the same prefix no matter how many draws other
// streams made. Bit-identical across runs and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  // Independent stream keyed by (this stream's seed, index).
  Rng substream(std::uint64_t index) const {
    return Rng(detail::mix64(seed_ ^ detail::mix64(index + 0x1a2b3c4d5e6f7788ULL)));
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Shift into (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound) by rejection; bound >= 1.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t value = next_u64();
      if (value >= threshold) return value % bound;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic seed derivation for grid cells and substream tags.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return detail::mix64(seed ^ detail::mix64(a + 0x9e3779b97f4a7c15ULL) ^
                       detail::mix64(b + 0x2545f4914f6cdd1dULL));
}

}  // namespace pathnet
