#pragma once

#include "multistab/integrate.hpp"
#include "multistab/model.hpp"

namespace fixtures {

using multistab::NetworkState;

/// N=2 initial states that settle on known attractors at eps = 0.15.
inline NetworkState la_la_ic() {
  NetworkState s(4);
  s << -27.0, 0.39, -20.0, 0.45;
  return s;
}

inline NetworkState la_sa_ic() {
  NetworkState s(4);
  s << -27.0, 0.39, -64.0, 0.0;
  return s;
}

/// State after `t` time units at the given coupling.
inline NetworkState settle(const NetworkState& s0, const multistab::CouplingConfig& c,
                           double t = 1000.0, const multistab::ModelParams& p = {}) {
  const multistab::NetworkSystem sys(p, c);
  return multistab::advance(multistab::make_vector_field(sys), s0, t);
}

}  // namespace fixtures
