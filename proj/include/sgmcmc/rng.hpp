#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "sgmcmc/types.hpp"

namespace sgmcmc {

//! Chain-local random source.
//!
//! Gaussian deviates come from an explicit Box-Muller transform rather than
//! std::normal_distribution, so the complete generator state (engine words
//! plus the one cached deviate) can be serialized and restored exactly —
//! resuming a chain from a checkpoint reproduces the identical trajectory.
template <typename S = double>
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    engine_.seed(splitmix64(seed));
    has_spare_ = false;
    spare_ = S(0);
  }

  //! Uniform in [0, 1).
  S uniform() { return S(engine_() >> 11) * S(0x1.0p-53); }

  //! Standard normal deviate.
  S normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite
    const S u1 = S((engine_() >> 11) + 1) * S(0x1.0p-53);
    const S u2 = uniform();
    const S r = std::sqrt(S(-2) * std::log(u1));
    const S a = S(2) * std::numbers::pi_v<S> * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  VectorX<S> normal_vector(Index d) {
    VectorX<S> z(d);
    for (Index i = 0; i < d; ++i) z(i) = normal();
    return z;
  }

  //! Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  Index uniform_index(Index n) { return static_cast<Index>(uniform_below(static_cast<std::uint64_t>(n))); }

  std::string state() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' '
       << std::bit_cast<std::uint64_t>(static_cast<double>(spare_));
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    int spare_flag = 0;
    std::uint64_t spare_bits = 0;
    is >> engine_ >> spare_flag >> spare_bits;
    if (is.fail()) throw config_error("Rng::set_state: malformed state string");
    has_spare_ = spare_flag != 0;
    spare_ = static_cast<S>(std::bit_cast<double>(spare_bits));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  S spare_ = S(0);
};

}  // namespace sgmcmc
