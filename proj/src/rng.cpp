#include "unravel/rng.hpp"

#include <cmath>

namespace unravel {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t counter_word(uint64_t seed, uint64_t stream, uint64_t step,
                             uint64_t lane) {
  uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ step);
  h = mix64(h ^ lane);
  return h;
}

// top 53 bits, shifted into (0, 1] so log() below is safe
inline double to_unit(uint64_t w) {
  return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double RngStream::uniform(uint64_t step, uint32_t channel) const {
  return to_unit(counter_word(seed, stream, step, uint64_t{channel} << 1));
}

double RngStream::gaussian(uint64_t step, uint32_t channel) const {
  const uint64_t lane = uint64_t{channel} << 1;
  const double u1 = to_unit(counter_word(seed, stream, step, lane));
  const double u2 = to_unit(counter_word(seed, stream, step, lane | 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace unravel
