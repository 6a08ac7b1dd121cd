#include <doctest.h>

#include <cmath>
#include <vector>

#include "dynwalk/birth_death.hpp"
#include "dynwalk/closed_forms.hpp"
#include "dynwalk/errors.hpp"
#include "dynwalk/regeneration.hpp"

using namespace dynwalk;
namespace cf = closed_forms;

namespace {

WalkerParams make_params(WalkerKind kind, double lambda, double mu, int d,
                         ConductanceLaw law) {
  WalkerParams p;
  p.kind = kind;
  p.lambda = lambda;
  p.mu = mu;
  p.d = d;
  p.law = std::move(law);
  return p;
}

Edge edge_at(std::int64_t x, int axis = 1) {
  Edge e;
  e.site.c[0] = x;
  e.axis = axis;
  return e;
}

}  // namespace

TEST_CASE("infected set copy bookkeeping") {
  InfectedSet set;
  CHECK(set.empty());
  CHECK(set.add(edge_at(0)));       // copy 1
  CHECK_FALSE(set.add(edge_at(0)));  // copy 2
  CHECK(set.add(edge_at(5)));
  CHECK(set.total() == 3);
  CHECK(set.distinct_edges() == 2);

  // removing a non-first copy must not mark the edge as refreshed;
  // exhaust the set and count first-copy removals per edge
  RngStream rng(1, 0);
  int first_removals = 0;
  while (!set.empty()) {
    auto rem = set.remove_uniform(rng);
    if (rem.was_first_copy) ++first_removals;
  }
  CHECK(first_removals == 2);  // exactly one first copy per distinct edge
  CHECK_THROWS_AS(set.remove_uniform(rng), AssumptionViolationError);
}

TEST_CASE("infected set re-issues copy 1 after it dies") {
  InfectedSet set;
  set.add(edge_at(0));   // copy 1
  set.add(edge_at(0));   // copy 2
  RngStream rng(2, 0);
  // remove until the first copy of the edge has died, then a fresh add
  // must be a first copy again
  bool saw_first = false;
  while (!saw_first) {
    if (set.empty()) {
      set.add(edge_at(0));
      set.add(edge_at(0));
    }
    saw_first = set.remove_uniform(rng).was_first_copy;
  }
  CHECK(set.add(edge_at(0)));
}

TEST_CASE("uniform removal is uniform over copies") {
  // two edges with 1 and 3 copies: the single copy of edge A dies first
  // with probability 1/4
  RngStream rng(3, 0);
  const int trials = 40000;
  int a_first = 0;
  for (int i = 0; i < trials; ++i) {
    InfectedSet set;
    set.add(edge_at(0));
    set.add(edge_at(1));
    set.add(edge_at(1));
    set.add(edge_at(1));
    if (set.remove_uniform(rng).edge == edge_at(0)) ++a_first;
  }
  double p_hat = static_cast<double>(a_first) / trials;
  CHECK(std::fabs(p_hat - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / trials));
}

TEST_CASE("vbrw regeneration moments match the closed forms") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::vbrw, 0.0, 2.0, 1, law);
  RngStream rng(10, 0);
  CycleBatch batch = run_cycles(params, 20000, rng);
  SpeedEstimate est = estimate_speed(batch.records);
  auto cfm = cf::vbrw_regen_moments(0.0, 2.0, 1.0, 1);

  double se_n = (est.attempts_ci_high - est.attempts_ci_low) / (2.0 * 2.5758);
  CHECK(std::fabs(est.mean_attempts - cfm.expected_attempts) < 3.0 * se_n);
  double se_tau = (est.tau_ci_high - est.tau_ci_low) / (2.0 * 2.5758);
  CHECK(std::fabs(est.mean_tau - cfm.expected_tau) < 3.0 * se_tau);
}

TEST_CASE("nvbrw regeneration attempts do not depend on lambda") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  RngStream rng(11, 0);
  auto cfm = cf::nvbrw_regen_moments(2.0, 1.0);  // e^{1/2}
  for (double lambda : {0.0, 2.0}) {
    auto params = make_params(WalkerKind::nvbrw, lambda, 2.0, 1, law);
    CycleBatch batch = run_cycles(params, 20000, rng);
    SpeedEstimate est = estimate_speed(batch.records);
    double se_n = (est.attempts_ci_high - est.attempts_ci_low) / (2.0 * 2.5758);
    CHECK(std::fabs(est.mean_attempts - cfm.expected_attempts) < 3.0 * se_n);
  }
}

TEST_CASE("estimate_speed handles degenerate and tiny inputs") {
  std::vector<RegenCycleRecord> records(40);
  for (auto& r : records) {
    r.tau = 1.0;
    r.displacement[0] = 1;
    r.attempts = 1;
  }
  SpeedEstimate est = estimate_speed(records);
  CHECK(est.point == doctest::Approx(1.0));
  CHECK(est.ci_low == doctest::Approx(1.0));
  CHECK(est.ci_high == doctest::Approx(1.0));

  records.resize(29);
  CHECK_THROWS_AS(estimate_speed(records), InsufficientSamplesError);
}

TEST_CASE("zero bias speed interval contains zero") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::nvbrw, 0.0, 1.0, 1, law);
  RngStream rng(12, 0);
  CycleBatch batch = run_cycles(params, 20000, rng);
  SpeedEstimate est = estimate_speed(batch.records);
  CHECK(est.ci_low <= 0.0);
  CHECK(est.ci_high >= 0.0);
}

TEST_CASE("positive bias gives positive mean cycle displacement") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::nvbrw, 1.0, 1.0, 1, law);
  RngStream rng(13, 0);
  CycleBatch batch = run_cycles(params, 20000, rng);
  SpeedEstimate est = estimate_speed(batch.records);
  CHECK(est.ci_low > 0.0);
}

TEST_CASE("totally asymmetric cycles recover the closed-form speed") {
  auto params = make_params(WalkerKind::totally_asymmetric, 0.0, 1.0, 1,
                            ConductanceLaw::two_point(0.0, 1.0, 0.5, 1.0));
  RngStream rng(24, 0);
  CycleBatch batch = run_cycles(params, 30000, rng);
  SpeedEstimate est = estimate_speed(batch.records);
  CHECK(est.ci_low <= 1.0 / 3.0);
  CHECK(est.ci_high >= 1.0 / 3.0);
}

TEST_CASE("cycles look i.i.d. (lag-1 autocorrelation in the noise band)") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::nvbrw, 0.7, 1.0, 1, law);
  RngStream rng(14, 0);
  CycleBatch batch = run_cycles(params, 20000, rng);
  std::vector<double> taus, dxs;
  for (const auto& r : batch.records) {
    taus.push_back(r.tau);
    dxs.push_back(static_cast<double>(r.displacement_e1()));
  }
  double band = 4.0 / std::sqrt(static_cast<double>(taus.size()));
  CHECK(std::fabs(stats::lag1_autocorr(taus)) < band);
  CHECK(std::fabs(stats::lag1_autocorr(dxs)) < band);
}

TEST_CASE("tau tail is exponential") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::vbrw, 0.5, 1.0, 1, law);
  RngStream rng(15, 0);
  CycleBatch batch = run_cycles(params, 20000, rng);
  std::vector<double> taus;
  for (const auto& r : batch.records) taus.push_back(r.tau);
  TailFit fit = tail_exponent_fit(taus);
  CHECK(fit.rate > 0.0);
  CHECK(fit.r_squared > 0.95);
}

TEST_CASE("infected-set size distribution matches the birth-death chain") {
  // VBRW embedded return steps are 2 N(tau); the auxiliary chain with
  // alpha = kappa Z_lambda and L = 1 must produce the same distribution.
  const double lambda = 0.5, mu = 1.5, kappa = 1.0;
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, kappa);
  auto params = make_params(WalkerKind::vbrw, lambda, mu, 1, law);
  RngStream rng(16, 0);
  CycleBatch batch = run_cycles(params, 15000, rng);
  std::vector<double> regen_steps;
  for (const auto& r : batch.records)
    regen_steps.push_back(2.0 * static_cast<double>(r.attempts));

  BDParams bd{kappa * cf::z_lambda(lambda, 1), mu, 1};
  RngStream rng2(17, 0);
  std::vector<double> bd_steps;
  for (int i = 0; i < 15000; ++i)
    bd_steps.push_back(static_cast<double>(simulate_bd_return(bd, rng2).steps));

  auto ks = stats::ks_two_sample(regen_steps, bd_steps);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("cbrw cycles: every jump infects all incident edges") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::cbrw, 1.0, 1.0, 2, law);
  RngStream rng(18, 0);
  CycleBatch batch = run_cycles(params, 2000, rng);
  for (const auto& r : batch.records) {
    CHECK(r.tau > 0.0);
    CHECK(r.right <= r.right_attempts);
    CHECK(r.left <= r.left_attempts);
    CHECK(r.right_attempts + r.left_attempts <= r.attempts);
    CHECK(std::llabs(r.displacement_e1()) <= static_cast<std::int64_t>(r.attempts));
  }
}

TEST_CASE("cycle caps trigger a descriptive overflow error") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::vbrw, 0.0, 0.001, 1, law);
  RngStream rng(19, 0);
  CycleCaps caps;
  caps.max_infected = 10;
  CHECK_THROWS_AS(run_cycles(params, 5, rng, caps), CycleOverflowError);
}

TEST_CASE("reweighted displacement: identity at zero target") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::nvbrw, 0.0, 2.0, 1, law);
  RngStream rng(20, 0);
  CycleBatch batch = run_cycles(params, 5000, rng);
  double direct = 0.0;
  for (const auto& r : batch.records)
    direct += static_cast<double>(r.right) - static_cast<double>(r.left);
  direct /= static_cast<double>(batch.records.size());
  CHECK(reweighted_displacement(batch, 0.0) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("reweighted displacement agrees with a direct run") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  const double mu = 2.0, target = 0.5;
  RngStream rng(21, 0);
  CycleBatch zero = run_cycles(make_params(WalkerKind::nvbrw, 0.0, mu, 1, law), 60000, rng);
  stats::Moments rw = reweighted_displacement_moments(zero, target);

  RngStream rng2(22, 0);
  CycleBatch direct = run_cycles(make_params(WalkerKind::nvbrw, target, mu, 1, law), 60000, rng2);
  std::vector<double> dxs;
  for (const auto& r : direct.records)
    dxs.push_back(static_cast<double>(r.displacement_e1()));
  stats::Moments dm = stats::moments(dxs);

  double combined = std::hypot(rw.se(), dm.se());
  CHECK(std::fabs(rw.mean - dm.mean) < 4.0 * combined);
}

TEST_CASE("reweighting rejects records from the wrong source") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  RngStream rng(23, 0);
  CycleBatch biased = run_cycles(make_params(WalkerKind::nvbrw, 0.5, 1.0, 1, law), 50, rng);
  CHECK_THROWS_AS(reweighted_displacement(biased, 0.5), AssumptionViolationError);
  CycleBatch vb = run_cycles(make_params(WalkerKind::vbrw, 0.0, 1.0, 1, law), 50, rng);
  CHECK_THROWS_AS(reweighted_displacement(vb, 0.5), AssumptionViolationError);
}

TEST_CASE("regenerative speed matches a plain long-horizon run") {
  // Dual-route check: the event-driven joint construction (infected set,
  // held edges, removal-triggered refreshes) and the plain lazy sampler are
  // two implementations of the same process; their speed estimates must
  // agree.
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  struct Case {
    WalkerKind kind;
    double lambda;
  };
  for (Case c : {Case{WalkerKind::vbrw, 0.8}, Case{WalkerKind::nvbrw, 1.0},
                 Case{WalkerKind::cbrw, 1.0}}) {
    auto params = make_params(c.kind, c.lambda, 1.0, 1, law);

    RngStream rng_cycles(25, 0);
    CycleBatch batch = run_cycles(params, 50000, rng_cycles);
    SpeedEstimate est = estimate_speed(batch.records);

    RngStream rng_run(26, 0);
    DynEnvironment env(Geometry::lattice(1), 1.0, law);
    const double horizon = 30000.0;
    Trajectory traj = run_walk(params, env, horizon, rng_run);
    const int B = 100;
    std::vector<double> rates(B, 0.0);
    double batch_len = horizon / B;
    std::size_t ev = 0;
    std::int64_t pos = 0, prev = 0;
    for (int b = 0; b < B; ++b) {
      double end = batch_len * (b + 1);
      while (ev < traj.events.size() && traj.events[ev].time <= end) {
        if (traj.events[ev].success) pos += traj.events[ev].axis > 0 ? 1 : -1;
        ++ev;
      }
      rates[b] = static_cast<double>(pos - prev) / batch_len;
      prev = pos;
    }
    stats::Moments rm = stats::moments(rates);
    double combined = std::hypot(est.se, rm.se());
    INFO(walker_kind_name(c.kind));
    CHECK(std::fabs(est.point - rm.mean) < 4.0 * combined);
  }
}

TEST_CASE("parallel replica fan-out is deterministic and merge-stable") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::nvbrw, 0.5, 1.0, 1, law);
  CycleBatch a = run_cycles_parallel(params, 400, 99, 4, {}, 0, 1);
  CycleBatch b = run_cycles_parallel(params, 400, 99, 4, {}, 0, 2);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].tau == b.records[i].tau);
    CHECK(a.records[i].displacement == b.records[i].displacement);
  }
}
