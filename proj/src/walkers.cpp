#include "dynwalk/walkers.hpp"

#include <cmath>
#include <limits>

#include "dynwalk/errors.hpp"

namespace dynwalk {

const char* walker_kind_name(WalkerKind k) {
  switch (k) {
    case WalkerKind::vbrw: return "vbrw";
    case WalkerKind::nvbrw: return "nvbrw";
    case WalkerKind::cbrw: return "cbrw";
    case WalkerKind::totally_asymmetric: return "tasym";
  }
  return "?";
}

double WalkerParams::attempt_rate() const {
  switch (kind) {
    case WalkerKind::vbrw: return z_lambda(lambda, d) * law.kappa();
    case WalkerKind::nvbrw: return law.kappa();
    case WalkerKind::cbrw: return 1.0;
    case WalkerKind::totally_asymmetric: return law.kappa();
  }
  return 0.0;
}

void WalkerParams::validate() const {
  if (d < 1 || d > kMaxDim) throw CapabilityError("walker: dimension must be in [1,4]");
  if (!(mu > 0.0)) throw CapabilityError("walker: mu must be positive");
  LawCapabilities caps = law.validate();
  switch (kind) {
    case WalkerKind::vbrw:
    case WalkerKind::nvbrw:
      if (lambda < 0.0)
        throw CapabilityError("walker: negative bias is only defined for the constant speed walk");
      if (!caps.bounded_support)
        throw CapabilityError("walker: variable speed walks require a bounded conductance law");
      break;
    case WalkerKind::cbrw:
      if (!caps.zero_free || !caps.log_moment_finite)
        throw CapabilityError(
            "walker: the constant speed walk requires q({0}) = 0 and a finite E|log w|");
      break;
    case WalkerKind::totally_asymmetric:
      if (d != 1)
        throw CapabilityError("walker: the totally asymmetric walk is defined only for d = 1");
      break;
  }
}

Direction attempt_direction(double u, double lambda, int d) {
  double z = z_lambda(lambda, d);
  if (u < 0.0 || u > z) throw AssumptionViolationError("attempt_direction: u outside [0, Z]");
  double split = 2.0 * d - 2.0;
  if (u < split) {
    // First the d-1 positive non-e_1 axes, then the d-1 negative ones.
    int slot = static_cast<int>(u);
    if (slot >= 2 * d - 2) slot = 2 * d - 3;  // guard against fp edge
    if (slot < d - 1) return Direction{slot + 2, +1};
    return Direction{slot - (d - 1) + 2, -1};
  }
  if (u < split + std::exp(lambda)) return Direction{1, +1};
  return Direction{1, -1};
}

double total_jump_rate(const SiteView& view, double lambda) {
  double total = std::exp(lambda) * view.value[0][0] + std::exp(-lambda) * view.value[0][1];
  for (int a = 2; a <= view.d; ++a) total += view.value[a - 1][0] + view.value[a - 1][1];
  return total;
}

Direction choose_neighbor(const SiteView& view, double lambda, RngStream& rng) {
  double total = total_jump_rate(view, lambda);
  if (!(total > 0.0))
    throw AssumptionViolationError("choose_neighbor: all incident conductances vanish");
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (int a = 1; a <= view.d; ++a) {
    for (int s = 0; s < 2; ++s) {
      double w = view.value[a - 1][s];
      if (a == 1) w *= std::exp(s == 0 ? lambda : -lambda);
      acc += w;
      if (u < acc) return Direction{a, s == 0 ? +1 : -1};
    }
  }
  return Direction{view.d, -1};
}

namespace {

void record_attempt(Trajectory& traj, double t, const Direction& dir, bool success, Site& pos) {
  traj.events.push_back({t, static_cast<std::int8_t>(dir.sign * dir.axis), success});
  ++traj.attempts;
  if (dir.axis == 1) {
    if (dir.sign > 0) {
      ++traj.right_attempts;
      if (success) ++traj.right_successes;
    } else {
      ++traj.left_attempts;
      if (success) ++traj.left_successes;
    }
  }
  if (success) pos = neighbor(pos, dir.axis, dir.sign);
}

// Shared body of vbrw/nvbrw/tasym: attempts at the given Poisson rate;
// totally asymmetric attempts skip the direction draw.
Trajectory attempt_walk(const WalkerParams& params, DynEnvironment& env, double horizon,
                        RngStream& rng, double rate, bool always_right) {
  Trajectory traj;
  traj.horizon = horizon > 0.0 ? horizon : 0.0;
  if (horizon <= 0.0) return traj;
  double kappa = params.law.kappa();
  Site pos{};
  double t = 0.0;
  for (;;) {
    t += rng.exponential(rate);
    if (t > horizon) break;
    Direction dir{1, +1};
    if (!always_right) {
      double u = rng.uniform(0.0, z_lambda(params.lambda, params.d));
      dir = attempt_direction(u, params.lambda, params.d);
    }
    Edge e = incident_edge(pos, dir.axis, dir.sign);
    double w = env.conductance_at(e, t, rng);
    double v = rng.uniform(0.0, kappa);
    record_attempt(traj, t, dir, v <= w, pos);
  }
  traj.final_position = pos;
  return traj;
}

}  // namespace

Trajectory vbrw_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                    RngStream& rng) {
  params.validate();
  return attempt_walk(params, env, horizon, rng, params.attempt_rate(), false);
}

Trajectory nvbrw_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                     RngStream& rng) {
  params.validate();
  return attempt_walk(params, env, horizon, rng, params.law.kappa(), false);
}

Trajectory tasym_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                     RngStream& rng) {
  params.validate();
  return attempt_walk(params, env, horizon, rng, params.law.kappa(), true);
}

namespace {

// A jump inspects all 2d incident edges, forcing their realization, then
// moves proportionally to the tilted values. Stops at whichever of the time
// horizon / jump budget is hit first.
Trajectory cbrw_body(const WalkerParams& params, DynEnvironment& env, double horizon,
                     std::uint64_t max_jumps, RngStream& rng) {
  params.validate();
  Trajectory traj;
  traj.horizon = horizon > 0.0 ? horizon : 0.0;
  if (horizon <= 0.0 || max_jumps == 0) return traj;
  Site pos{};
  double t = 0.0;
  for (std::uint64_t jumps = 0; jumps < max_jumps;) {
    t += rng.exponential(1.0);
    if (t > horizon) break;
    SiteView view;
    view.d = params.d;
    for (int a = 1; a <= params.d; ++a) {
      view.value[a - 1][0] = env.conductance_at(incident_edge(pos, a, +1), t, rng);
      view.value[a - 1][1] = env.conductance_at(incident_edge(pos, a, -1), t, rng);
    }
    Direction dir = choose_neighbor(view, params.lambda, rng);
    record_attempt(traj, t, dir, true, pos);
    ++jumps;
  }
  traj.final_position = pos;
  return traj;
}

}  // namespace

Trajectory cbrw_run(const WalkerParams& params, DynEnvironment& env, double horizon,
                    RngStream& rng) {
  return cbrw_body(params, env, horizon, ~0ULL, rng);
}

Trajectory cbrw_run_jumps(const WalkerParams& params, DynEnvironment& env,
                          std::uint64_t n_jumps, RngStream& rng) {
  return cbrw_body(params, env, std::numeric_limits<double>::infinity(), n_jumps, rng);
}

Trajectory run_walk(const WalkerParams& params, DynEnvironment& env, double horizon,
                    RngStream& rng) {
  switch (params.kind) {
    case WalkerKind::vbrw: return vbrw_run(params, env, horizon, rng);
    case WalkerKind::nvbrw: return nvbrw_run(params, env, horizon, rng);
    case WalkerKind::cbrw: return cbrw_run(params, env, horizon, rng);
    case WalkerKind::totally_asymmetric: return tasym_run(params, env, horizon, rng);
  }
  throw CapabilityError("run_walk: unknown walker kind");
}

}  // namespace dynwalk
