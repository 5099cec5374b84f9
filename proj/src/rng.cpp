#include "segkit/rng.hpp"

namespace segkit {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t CounterRng::at(std::uint64_t counter) const {
  // Chain the three key words through the mixer; any change to seed,
  // stream or counter decorrelates the whole output.
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ (stream_ + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (counter + 0x9e3779b97f4a7c15ULL));
  return h;
}

}  // namespace segkit
