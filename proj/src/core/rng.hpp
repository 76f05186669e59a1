#pragma once

#include <cmath>
#include <cstdint>

namespace spdnn {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Counter-based generator: draw k of stream `seed` is
//   mix64(seed + (k+1) * 0x9e3779b97f4a7c15)
// i.e. the SplitMix64 sequence.  Each output is a pure function of
// (seed, counter), so other implementations can reproduce the streams
// statistically from these constants alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  // uniform on (0,1), 53-bit resolution, never exactly 0 or 1
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

  // standard normal via Box-Muller; consumes two uniforms per pair
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // standard Laplace: density exp(-|y|)/2, variance 2
  double laplace() {
    double u = uniform() - 0.5;
    double v = std::log1p(-2.0 * std::fabs(u));
    return u < 0.0 ? v : -v;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// derives an independent stream seed for parallel replications
inline std::uint64_t seed_split(std::uint64_t seed, std::uint64_t stream) {
  return detail::mix64(seed ^ detail::mix64(stream ^ 0x5851f42d4c957f2dULL));
}

}  // namespace spdnn
