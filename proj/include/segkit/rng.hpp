#pragma once

#include <cstdint>

namespace segkit {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so outputs are reproducible regardless of
// evaluation order and identical across platforms. The mixer is
// splitmix64 applied to the combined key.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return at(counter_++); }

  // value in [0, bound)
  std::uint64_t next_below(std::uint64_t bound) {
    return bound == 0 ? 0 : next_u64() % bound;
  }

  // value in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  std::uint64_t at(std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace segkit
