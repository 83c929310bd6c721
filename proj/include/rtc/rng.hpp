// Counter-based random streams.
//
// A stream is identified by (seed, label); its n-th output is a pure function
// of (seed, label, n), so independent streams reproduce regardless of how work
// is scheduled and the full state is two integers.
#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace rtc {

class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::string_view stream);

  /// Derived stream; does not advance this one.
  Rng substream(std::string_view label) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller on two fresh uniforms; no cached state).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }
  static Rng from_state(std::uint64_t key, std::uint64_t counter);

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  Rng() = default;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);

}  // namespace rtc
