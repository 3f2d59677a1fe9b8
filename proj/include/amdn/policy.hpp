#pragma once

#include <functional>

#include "amdn/drivers.hpp"
#include "amdn/simulator.hpp"
#include "amdn/types.hpp"

namespace amdn {

/// Any follower controller: observation in, pedal in [-1, 1] out.
using PedalPolicy = std::function<double(const Observation&, Rng&)>;

inline PedalPolicy make_expert_policy(ExpertGains gains, bool noisy = false) {
  return [gains, noisy](const Observation& obs, Rng& rng) {
    return expert_pedal(obs, gains, rng, noisy);
  };
}

inline PedalPolicy make_constant_policy(double pedal) {
  return [pedal](const Observation&, Rng&) { return pedal; };
}

}  // namespace amdn
