#include "dynwalk/couplings.hpp"

#include <cmath>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

void record_event(Trajectory& traj, double t, const Direction& dir, bool success, Site& pos) {
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

bool attempt_on_shared_env(DynEnvironment& env, Site& pos, int sign, double t, double v,
                           RngStream& rng, Trajectory& traj) {
  Edge e = incident_edge(pos, 1, sign);
  double w = env.conductance_at(e, t, rng);
  bool success = v <= w;
  record_event(traj, t, Direction{1, sign}, success, pos);
  return success;
}

}  // namespace

CoupledPair coupled_monotone_d1(double lambda, double epsilon, double mu,
                                const ConductanceLaw& law, double horizon, RngStream& rng) {
  if (lambda < 0.0 || epsilon < 0.0)
    throw CapabilityError("monotone coupling: lambda and epsilon must be nonnegative");
  if (!law.validate().bounded_support)
    throw CapabilityError("monotone coupling: bounded conductance law required");
  const double kappa = law.kappa();
  const double el = std::exp(lambda);
  const double ehi = std::exp(lambda + epsilon);
  const double span = ehi + std::exp(-lambda);
  const double rate = kappa * span;

  DynEnvironment env(Geometry::lattice(1), mu, law);
  CoupledPair pair;
  pair.traj_a.horizon = pair.traj_b.horizon = horizon;
  Site pos_a{}, pos_b{};
  double t = 0.0;
  for (;;) {
    t += rng.exponential(rate);
    if (t > horizon) break;
    double u = rng.uniform(0.0, span);
    double v = rng.uniform(0.0, kappa);
    if (u < el) {
      // Both attempt right; when the walkers sit on one site they read the
      // same edge and the shared v makes the outcome identical.
      attempt_on_shared_env(env, pos_a, +1, t, v, rng, pair.traj_a);
      attempt_on_shared_env(env, pos_b, +1, t, v, rng, pair.traj_b);
    } else if (u < ehi) {
      attempt_on_shared_env(env, pos_b, +1, t, v, rng, pair.traj_b);
    } else if (u < ehi + std::exp(-(lambda + epsilon))) {
      attempt_on_shared_env(env, pos_a, -1, t, v, rng, pair.traj_a);
      attempt_on_shared_env(env, pos_b, -1, t, v, rng, pair.traj_b);
    } else {
      attempt_on_shared_env(env, pos_a, -1, t, v, rng, pair.traj_a);
    }
    pair.shared_events.push_back({t, u, v, 0});
    if (pos_a.c[0] > pos_b.c[0]) ++pair.dominance_violations;
  }
  pair.traj_a.final_position = pos_a;
  pair.traj_b.final_position = pos_b;
  return pair;
}

CoupledPair coupled_nvbrw_dominated_by_tasym(double lambda, double mu,
                                             const ConductanceLaw& law, double horizon,
                                             RngStream& rng) {
  if (lambda < 0.0) throw CapabilityError("domination coupling: lambda must be nonnegative");
  const double kappa = law.kappa();
  const double el = std::exp(lambda);
  const double span = el + std::exp(-lambda);

  DynEnvironment env(Geometry::lattice(1), mu, law);
  CoupledPair pair;
  pair.traj_a.horizon = pair.traj_b.horizon = horizon;
  Site pos_y{}, pos_ta{};
  double t = 0.0;
  for (;;) {
    t += rng.exponential(kappa);
    if (t > horizon) break;
    double u = rng.uniform(0.0, span);
    double v = rng.uniform(0.0, kappa);
    attempt_on_shared_env(env, pos_y, u < el ? +1 : -1, t, v, rng, pair.traj_a);
    attempt_on_shared_env(env, pos_ta, +1, t, v, rng, pair.traj_b);
    pair.shared_events.push_back({t, u, v, 0});
    if (pos_ta.c[0] < pos_y.c[0]) ++pair.dominance_violations;
    if (!pair.decoupling_time && pos_ta.c[0] != pos_y.c[0]) pair.decoupling_time = t;
  }
  pair.traj_a.final_position = pos_y;
  pair.traj_b.final_position = pos_ta;
  return pair;
}

PointRates point_rates(double lambda, double epsilon, int d, double kappa) {
  double zl = z_lambda(lambda, d);
  double zh = z_lambda(lambda + epsilon, d);
  double good = kappa * std::exp(lambda) / zl;
  double bad = kappa * (2.0 * d - 2.0 + std::exp(-(lambda + epsilon))) / zh;
  double very_bad = kappa * (std::exp(lambda + epsilon) / zh - std::exp(lambda) / zl);
  return {good, bad, very_bad};
}

PointClass classify_point(double u, double lambda, double epsilon, int d) {
  if (u < 0.0 || u > 1.0) throw AssumptionViolationError("classify_point: u outside [0,1]");
  if (epsilon < 0.0) throw AssumptionViolationError("classify_point: epsilon must be >= 0");
  double zl = z_lambda(lambda, d);
  double zh = z_lambda(lambda + epsilon, d);
  double other = 2.0 * d - 2.0;
  double c1 = other / zh;
  double c2 = c1 + other * (1.0 / zl - 1.0 / zh);
  double c3 = c2 + std::exp(-(lambda + epsilon)) / zh;
  double c4 = c3 + (std::exp(-lambda) / zl - std::exp(-(lambda + epsilon)) / zh);
  if (u < c1) return {PointKind::bad, 1};
  if (u < c2) return {PointKind::very_bad, 2};
  if (u < c3) return {PointKind::bad, 3};
  if (u < c4) return {PointKind::very_bad, 4};
  return {PointKind::good, 5};
}

namespace {

Direction uniform_other_axis(int d, RngStream& rng) {
  // 2d-2 directions off the e_1 axis: first the + signs, then the - signs.
  std::uint64_t idx = rng.uniform_below(2 * static_cast<std::uint64_t>(d) - 2);
  int half = d - 1;
  if (idx < static_cast<std::uint64_t>(half))
    return Direction{static_cast<int>(idx) + 2, +1};
  return Direction{static_cast<int>(idx) - half + 2, -1};
}

struct PairWalker {
  Site pos{};
  InfectedSet infected;
  DynEnvironment env;
  RegenCycleRecord rec;

  explicit PairWalker(DynEnvironment e) : env(std::move(e)) {}
};

void apply_pair_counters(PairWalker& w, const Direction& dir, bool success) {
  ++w.rec.attempts;
  if (dir.axis == 1) {
    if (dir.sign > 0) {
      ++w.rec.right_attempts;
      if (success) ++w.rec.right;
    } else {
      ++w.rec.left_attempts;
      if (success) ++w.rec.left;
    }
  }
  if (success) w.pos = neighbor(w.pos, dir.axis, dir.sign);
}

// Reads the attempted edge, infects it (holding on a first copy), and
// resolves success against the provided threshold draw.
void pair_attempt(PairWalker& w, const Direction& dir, double t, double v, RngStream& env_rng) {
  Edge e = incident_edge(w.pos, dir.axis, dir.sign);
  double cond = w.env.conductance_at(e, t, env_rng);
  if (w.infected.add(e)) w.env.hold(e, t, env_rng);
  apply_pair_counters(w, dir, v <= cond);
}

void pair_removal(PairWalker& w, double t, RngStream& rng) {
  InfectedSet::Removal rem = w.infected.remove_uniform(rng);
  if (rem.was_first_copy) w.env.force_refresh(rem.edge, t, rng);
}

}  // namespace

BiasPairResult coupled_bias_pair_cycles(double lambda, double epsilon, double mu,
                                        const ConductanceLaw& law, int d,
                                        std::uint64_t n_cycles, RngStream& rng,
                                        const CycleCaps& caps) {
  if (!(epsilon >= 0.0)) throw CapabilityError("bias pair: epsilon must be >= 0");
  if (lambda < 0.0) throw CapabilityError("bias pair: lambda must be nonnegative");
  if (!law.validate().bounded_support)
    throw CapabilityError("bias pair: bounded conductance law required");
  if (d < 1 || d > kMaxDim) throw CapabilityError("bias pair: d must be in [1,4]");

  const double kappa = law.kappa();
  const double zl = z_lambda(lambda, d);
  const double zh = z_lambda(lambda + epsilon, d);

  BiasPairResult out;
  out.lambda = lambda;
  out.epsilon = epsilon;
  out.mu = mu;
  out.d = d;
  out.cycles.reserve(n_cycles);

  for (std::uint64_t c = 0; c < n_cycles; ++c) {
    BiasPairCycle cyc;
    // Until the first very bad point both processes coincide, so a single
    // walker state carries the pair; the fork below deep-copies it.
    PairWalker low(DynEnvironment(Geometry::lattice(d), mu, law, EnvMode::event_driven));
    PairWalker high = low;
    bool decoupled = false;
    double t = 0.0;
    std::int64_t attempt_index = 0;
    RngStream rng_low = rng.split(2 * c + 1);
    RngStream rng_high = rng.split(2 * c + 2);

    for (;;) {
      std::uint64_t infected_total = low.infected.total();
      if (decoupled && high.infected.total() != infected_total)
        ++out.infected_size_mismatches;
      bool do_attempt;
      double dt;
      if (infected_total == 0) {
        do_attempt = true;
        dt = rng.exponential(kappa);
      } else {
        double dta = rng.exponential(kappa);
        double dtr = rng.exponential(mu * static_cast<double>(infected_total));
        do_attempt = dta <= dtr;
        dt = do_attempt ? dta : dtr;
      }
      t += dt;
      if (t > caps.max_tau)
        throw CycleOverflowError("bias pair: tau cap exceeded; mu likely too small");

      if (do_attempt) {
        ++attempt_index;
        if (!decoupled) {
          PointClass pc = classify_point(rng.uniform(), lambda, epsilon, d);
          if (pc.kind == PointKind::bad && !cyc.saw_very_bad) cyc.saw_bad_before = true;
          if (pc.kind != PointKind::very_bad) {
            Direction dir{1, pc.case_id == 3 ? -1 : +1};
            if (pc.case_id == 1) dir = uniform_other_axis(d, rng);
            double v = rng.uniform(0.0, kappa);
            pair_attempt(low, dir, t, v, rng);
          } else {
            // First divergence: both walkers read the shared field and the
            // shared success draw at this instant, then evolve independently.
            cyc.saw_very_bad = true;
            cyc.first_very_bad_index = attempt_index;
            Direction dir_low =
                pc.case_id == 2 ? uniform_other_axis(d, rng) : Direction{1, -1};
            Direction dir_high{1, +1};
            Edge e_low = incident_edge(low.pos, dir_low.axis, dir_low.sign);
            Edge e_high = incident_edge(low.pos, dir_high.axis, dir_high.sign);
            double w_low = low.env.conductance_at(e_low, t, rng);
            double w_high = low.env.conductance_at(e_high, t, rng);
            double v = rng.uniform(0.0, kappa);
            high = low;
            if (low.infected.add(e_low)) low.env.hold(e_low, t, rng);
            apply_pair_counters(low, dir_low, v <= w_low);
            if (high.infected.add(e_high)) high.env.hold(e_high, t, rng);
            apply_pair_counters(high, dir_high, v <= w_high);
            decoupled = true;
          }
        } else {
          Direction dl = attempt_direction(rng_low.uniform(0.0, zl), lambda, d);
          double vl = rng_low.uniform(0.0, kappa);
          pair_attempt(low, dl, t, vl, rng_low);
          Direction dh = attempt_direction(rng_high.uniform(0.0, zh), lambda + epsilon, d);
          double vh = rng_high.uniform(0.0, kappa);
          pair_attempt(high, dh, t, vh, rng_high);
        }
        if (low.infected.total() > caps.max_infected)
          throw CycleOverflowError("bias pair: infected-set cap exceeded");
      } else {
        if (!decoupled) {
          InfectedSet::Removal rem = low.infected.remove_uniform(rng);
          if (rem.was_first_copy) low.env.force_refresh(rem.edge, t, rng);
        } else {
          pair_removal(low, t, rng_low);
          pair_removal(high, t, rng_high);
        }
        if (low.infected.empty()) break;
      }
    }
    if (!decoupled) high = low;
    cyc.low.tau = cyc.high.tau = t;
    for (int i = 0; i < kMaxDim; ++i) {
      cyc.low.displacement[i] = low.pos.c[i];
      cyc.high.displacement[i] = high.pos.c[i];
    }
    cyc.low.attempts = low.rec.attempts;
    cyc.low.right = low.rec.right;
    cyc.low.left = low.rec.left;
    cyc.low.right_attempts = low.rec.right_attempts;
    cyc.low.left_attempts = low.rec.left_attempts;
    cyc.high.attempts = high.rec.attempts;
    cyc.high.right = high.rec.right;
    cyc.high.left = high.rec.left;
    cyc.high.right_attempts = high.rec.right_attempts;
    cyc.high.left_attempts = high.rec.left_attempts;
    out.cycles.push_back(cyc);
  }
  return out;
}

GapEstimate dim_reduction_gap(double lambda, double mu, const ConductanceLaw& law, int d,
                              std::uint64_t n_cycles, std::uint64_t seed, unsigned workers,
                              const CycleCaps& caps) {
  if (d < 2) throw CapabilityError("dim_reduction_gap: requires d >= 2");
  double m = law.moment(MomentFunctional::mean, mu);
  double z = z_lambda(lambda, d);

  WalkerParams full;
  full.kind = WalkerKind::vbrw;
  full.lambda = lambda;
  full.mu = z * mu;
  full.d = d;
  full.law = law;

  WalkerParams proxy = full;
  proxy.d = 1;
  proxy.mu = z * mu + m * (2.0 * d - 2.0);

  CycleBatch bd = run_cycles_parallel(full, n_cycles, seed, workers, caps, 0);
  CycleBatch b1 = run_cycles_parallel(proxy, n_cycles, seed, workers, caps, 1000000);

  GapEstimate g;
  g.speed_dd = estimate_speed(bd.records);
  g.speed_1d = estimate_speed(b1.records);
  g.gap = std::fabs(g.speed_1d.point - g.speed_dd.point);
  double se = std::hypot(g.speed_1d.se, g.speed_dd.se);
  double zq = stats::two_sided_z(0.99);
  g.ci_low = std::max(0.0, g.gap - zq * se);
  g.ci_high = g.gap + zq * se;
  return g;
}

}  // namespace dynwalk
