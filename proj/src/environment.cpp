#include "dynwalk/environment.hpp"

#include <cmath>

#include "dynwalk/errors.hpp"

namespace dynwalk {

DynEnvironment::DynEnvironment(Geometry geometry, double mu, ConductanceLaw law, EnvMode mode)
    : geom_(geometry), mu_(mu), law_(std::move(law)), mode_(mode) {
  if (mu_ < 0.0) throw ConstructionError("environment: mu must be nonnegative");
}

DynEnvironment::EdgeState& DynEnvironment::realize(const Edge& e, double t, RngStream& rng) {
  auto [it, inserted] = realized_.try_emplace(e);
  if (inserted) {
    it->second = EdgeState{law_.sample(rng), t, false};
    return it->second;
  }
  EdgeState& st = it->second;
  if (t < st.last_time)
    throw ClockRegressionError("environment: query at t earlier than last known time");
  if (st.held) {
    st.last_time = t;
    return st;
  }
  double dt = t - st.last_time;
  if (dt > 0.0 && mu_ > 0.0) {
    // Kept only if no refresh fired in (last_time, t].
    if (rng.uniform() >= std::exp(-mu_ * dt)) st.value = law_.sample(rng);
  }
  st.last_time = t;
  return st;
}

double DynEnvironment::conductance_at(const Edge& e, double t, RngStream& rng) {
  return realize(canonical_edge(geom_, e), t, rng).value;
}

double DynEnvironment::force_refresh(const Edge& e, double t, RngStream& rng) {
  if (mode_ != EnvMode::event_driven)
    throw ModeViolationError("environment: force_refresh requires event_driven mode");
  Edge ce = canonical_edge(geom_, e);
  auto [it, inserted] = realized_.try_emplace(ce);
  if (!inserted && t < it->second.last_time)
    throw ClockRegressionError("environment: refresh at t earlier than last known time");
  it->second = EdgeState{law_.sample(rng), t, false};
  return it->second.value;
}

void DynEnvironment::hold(const Edge& e, double t, RngStream& rng) {
  if (mode_ != EnvMode::event_driven)
    throw ModeViolationError("environment: hold requires event_driven mode");
  EdgeState& st = realize(canonical_edge(geom_, e), t, rng);
  st.held = true;
}

bool DynEnvironment::is_held(const Edge& e) const {
  auto it = realized_.find(canonical_edge(geom_, e));
  return it != realized_.end() && it->second.held;
}

void DynEnvironment::gc_sweep(const Site& center, std::int64_t radius) {
  for (auto it = realized_.begin(); it != realized_.end();) {
    std::int64_t dist = 0;
    for (int i = 0; i < geom_.d; ++i)
      dist = std::max<std::int64_t>(dist, std::llabs(it->first.site.c[i] - center.c[i]));
    if (dist > radius && !it->second.held)
      it = realized_.erase(it);
    else
      ++it;
  }
}

}  // namespace dynwalk
