#pragma once

// The four walk dynamics as exact event-driven samplers over a
// DynEnvironment: variable speed (VBRW), its rate-normalized version
// (NVBRW), the constant speed walk (CBRW), and the d=1 totally asymmetric
// walk. VBRW/NVBRW use the attempt construction: a Poisson clock proposes a
// direction from a uniform split of [0, Z_lambda] and the attempt succeeds
// when an independent Unif[0,kappa] falls below the edge conductance.

#include <cstdint>
#include <vector>

#include "dynwalk/closed_forms.hpp"
#include "dynwalk/conductance_law.hpp"
#include "dynwalk/environment.hpp"
#include "dynwalk/lattice.hpp"

namespace dynwalk {

using closed_forms::z_lambda;

enum class WalkerKind { vbrw, nvbrw, cbrw, totally_asymmetric };

const char* walker_kind_name(WalkerKind k);

struct WalkerParams {
  WalkerKind kind = WalkerKind::nvbrw;
  double lambda = 0.0;  // negative allowed only for cbrw
  double mu = 1.0;      // environment refresh rate
  int d = 1;
  ConductanceLaw law = ConductanceLaw::point_mass(1.0, 1.0);

  double attempt_rate() const;
  // Throws CapabilityError when the law or dimension does not support the
  // requested dynamics.
  void validate() const;
};

struct Direction {
  int axis = 1;   // 1..d
  int sign = 1;   // +1 or -1
};

// The uniform-split direction rule on [0, Z_lambda]; the +e_1 window is
// [2d-2, 2d-2+e^lambda) and its right boundary belongs to the -e_1 window.
Direction attempt_direction(double u, double lambda, int d);

struct TrajectoryEvent {
  double time;
  std::int8_t axis;  // signed: +a / -a means toward +e_a / -e_a
  bool success;
};

struct Trajectory {
  std::vector<TrajectoryEvent> events;
  Site final_position{};
  double horizon = 0.0;
  // Attempt bookkeeping along e_1 (successes R/L, attempts Ra/La) and total.
  std::uint64_t attempts = 0;
  std::uint64_t right_attempts = 0, left_attempts = 0;
  std::uint64_t right_successes = 0, left_successes = 0;

  std::int64_t displacement_e1() const { return final_position.c[0]; }
};

// Conductances of the 2d edges incident to one site at one instant.
struct SiteView {
  int d = 1;
  // value[axis-1][0] faces +e_axis, value[axis-1][1] faces -e_axis.
  double value[kMaxDim][2] = {};
};

// Total tilted jump rate W_lambda = sum over neighbors of e^{lambda s} w.
double total_jump_rate(const SiteView& view, double lambda);

// Neighbor choice proportional to the tilted conductances; all views must be
// positive for cbrw use.
Direction choose_neighbor(const SiteView& view, double lambda, RngStream& rng);

Trajectory vbrw_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                    RngStream& rng);
Trajectory nvbrw_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                     RngStream& rng);
Trajectory cbrw_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                    RngStream& rng);
// Constant speed walk stopped after a fixed number of jumps (the embedded
// chain of length n_jumps).
Trajectory cbrw_run_jumps(const WalkerParams& params, DynEnvironment& env,
                          std::uint64_t n_jumps, RngStream& rng);
Trajectory tasym_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                     RngStream& rng);

// Dispatch on params.kind.
Trajectory run_walk(const WalkerParams& params, DynEnvironment& env, double horizon,
                    RngStream& rng);

}  // namespace dynwalk
