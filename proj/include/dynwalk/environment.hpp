#pragma once

// Time-evolving conductance field on Z^d or the torus, realized lazily: an
// edge costs memory only once something looks at it. Two exact samplers of
// the same Markov process:
//
//   memoryless_lazy -- between queries an edge refreshes at rate mu, so at
//     query time the old value is kept with probability exp(-mu dt) and
//     resampled otherwise.
//   event_driven    -- refreshes of edges whose first infected copy is alive
//     are driven externally (hold/force_refresh); all other realized edges
//     still evolve by the lazy rule.
//
// One instance is confined to a single simulation replica.

#include <cstddef>
#include <unordered_map>

#include "dynwalk/conductance_law.hpp"
#include "dynwalk/lattice.hpp"

namespace dynwalk {

enum class EnvMode { memoryless_lazy, event_driven };

class DynEnvironment {
 public:
  // mu == 0 freezes the field (first draw persists forever); used by tests
  // that need the static-environment limit.
  DynEnvironment(Geometry geometry, double mu, ConductanceLaw law,
                 EnvMode mode = EnvMode::memoryless_lazy);

  const Geometry& geometry() const { return geom_; }
  double mu() const { return mu_; }
  const ConductanceLaw& law() const { return law_; }
  EnvMode mode() const { return mode_; }

  // Value of the edge at time t, evolving lazily as described above.
  // Queries must not move the clock backwards.
  double conductance_at(const Edge& e, double t, RngStream& rng);

  // Resamples the edge value at time t and releases any hold. Event-driven
  // mode only; called when a first copy leaves the infected set.
  double force_refresh(const Edge& e, double t, RngStream& rng);

  // Freezes the edge at its time-t value until the matching force_refresh.
  // Event-driven mode only; called when a first copy enters the infected set.
  void hold(const Edge& e, double t, RngStream& rng);
  bool is_held(const Edge& e) const;

  std::size_t realized_count() const { return realized_.size(); }
  void clear() { realized_.clear(); }

  // Optional sweep: drop realized edges with L-inf distance from center
  // beyond radius. Only safe when the caller will not query them again.
  void gc_sweep(const Site& center, std::int64_t radius);

 private:
  struct EdgeState {
    double value;
    double last_time;
    bool held;
  };

  EdgeState& realize(const Edge& e, double t, RngStream& rng);

  Geometry geom_;
  double mu_;
  ConductanceLaw law_;
  EnvMode mode_;
  std::unordered_map<Edge, EdgeState, EdgeHash> realized_;
};

}  // namespace dynwalk
