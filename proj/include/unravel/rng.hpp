#pragma once

#include <cstdint>

namespace unravel {

// Stateless counter-based stream: every variate is a pure function of
// (seed, stream, step, channel), so trajectories can be scheduled on any
// thread in any order and still draw identical numbers.
struct RngStream {
  uint64_t seed = 0;
  uint64_t stream = 0;

  double uniform(uint64_t step, uint32_t channel) const;   // (0, 1]
  double gaussian(uint64_t step, uint32_t channel) const;  // standard normal
};

}  // namespace unravel
