#pragma once

// Counter-based splittable RNG: stream i of seed s is SplitMix64 started at
// mix(s ^ mix(i)). Distributions are written out so that samples are identical
// on every platform and standard library.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bgq/numeric.hpp"

namespace bgq {

inline constexpr std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : state_(splitmix_finalize(seed ^ splitmix_finalize(stream + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return splitmix_finalize(state_);
  }
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2 * pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }
  // Uniform direction on S^{d-1}.
  std::vector<double> direction(int d) {
    std::vector<double> v(static_cast<std::size_t>(d));
    double n2 = 0;
    do {
      for (auto& x : v) x = normal();
      n2 = norm2(v);
    } while (n2 == 0.0);
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v) x *= inv;
    return v;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace bgq
