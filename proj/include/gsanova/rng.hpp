#pragma once

// Deterministic random variate generation.
//
// Every stochastic component of the library draws from this generator so that
// results are fixed by (seed, stream) and identical across platforms. The
// std:: distributions are deliberately avoided: their variate algorithms are
// implementation defined, so the same seed gives different streams on
// different standard libraries.
//
// Core generator: splitmix64 (Steele, Lea, Flood 2014). Normals: Box-Muller.
// Gamma: Marsaglia-Tsang (2000) squeeze for shape >= 1, with the usual
// G(a) = G(a+1) * U^(1/a) boost below 1.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gsanova::rng {

// Recorded in output manifests so archived results name their generator.
inline constexpr std::string_view algorithm_id =
    "splitmix64+box-muller+marsaglia-tsang";

// splitmix64 finalizer, also used to hash seed material.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from a base seed and a tag
// (replicate index, coordinate index, ...). Chaining calls is fine.
[[nodiscard]] constexpr std::uint64_t derive_stream(std::uint64_t seed,
                                                    std::uint64_t tag) noexcept {
  return mix64(seed ^ (0xd1b54a32d192ed03ULL * (tag + 1)));
}

class Generator {
 public:
  explicit Generator(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0,1), 53-bit resolution. Never returns an
  // exact endpoint, so logs and inverses downstream are safe.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, so draws come in deterministic order.
  double normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Gamma(shape, scale 1). Marsaglia-Tsang rejection; for shape < 1 the
  // boosted draw multiplies a Gamma(shape+1) variate by U^(1/shape), which
  // can underflow for very small shapes (use a composition at the call site
  // when that matters, as the noise sampler does).
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double boost = std::pow(uniform(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gsanova::rng
