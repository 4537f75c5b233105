#pragma once

#include <cmath>
#include <cstdint>

#include "spikemr/errors.hpp"

// Two-variable quadratic membrane dynamics for one cell over one millisecond.
//
// The floating-point expressions here are written in the exact shape every
// other component (and the frozen test values) expects. Do not refactor
// them algebraically: with contraction disabled at build level, the shape
// below pins the result bit for bit.

namespace spikemr::neuron {

struct Params {
  double a = 0.0;  // recovery time scale
  double b = 0.0;  // recovery sensitivity to v
  double c = 0.0;  // post-spike reset potential (mV)
  double d = 0.0;  // post-spike recovery increment
};

struct State {
  double v = 0.0;  // membrane potential (mV)
  double u = 0.0;  // recovery variable
};

struct SynapticInput {
  double value = 0.0;  // total injected current for this step
};

inline constexpr double kFireThreshold = 30.0;  // mV

// Advance one 1 ms step: two 0.5 ms Euler half-steps on v (u and I held
// fixed), then one full step on u using the updated v. Throws DivergedError
// (tagged with `neuron_id`/`iter` when the caller supplies them) if the
// result is non-finite.
inline State step(State s, const Params& p, SynapticInput in,
                  std::int64_t neuron_id = -1, std::int64_t iter = -1) {
  const double I = in.value;
  s.v += 0.5 * (0.04 * s.v * s.v + 5.0 * s.v + 140.0 - s.u + I);
  s.v += 0.5 * (0.04 * s.v * s.v + 5.0 * s.v + 140.0 - s.u + I);
  s.u += p.a * (p.b * s.v - s.u);
  if (!std::isfinite(s.v) || !std::isfinite(s.u)) {
    throw DivergedError(neuron_id, iter, s.v, s.u);
  }
  return s;
}

// A cell fires when the integrated potential reaches the threshold.
inline bool fired(const State& s) noexcept { return s.v >= kFireThreshold; }

// Post-spike reset: v <- c, u <- u + d. Only meaningful for a fired state.
inline State reset(const State& s, const Params& p) {
  if (!fired(s)) {
    throw ContractError("reset() requires a fired state (v >= 30)");
  }
  return State{p.c, s.u + p.d};
}

}  // namespace spikemr::neuron
