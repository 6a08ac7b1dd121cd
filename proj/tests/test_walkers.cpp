#include <doctest.h>

#include <cmath>
#include <vector>

#include "dynwalk/errors.hpp"
#include "dynwalk/stats.hpp"
#include "dynwalk/walkers.hpp"

using namespace dynwalk;

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

}  // namespace

TEST_CASE("attempt_direction partitions [0, Z] as specified") {
  // d=2, lambda=0: [0,1) +e2, [1,2) -e2, [2,3) +e1, [3,4] -e1
  CHECK(attempt_direction(0.5, 0.0, 2).axis == 2);
  CHECK(attempt_direction(0.5, 0.0, 2).sign == +1);
  CHECK(attempt_direction(2.5, 0.0, 2).axis == 1);
  CHECK(attempt_direction(2.5, 0.0, 2).sign == +1);
  CHECK(attempt_direction(1.5, 0.0, 2).sign == -1);
  // boundary at 2d-2+e^lambda belongs to the left-jump window
  Direction left = attempt_direction(std::exp(1.0), 1.0, 1);
  CHECK(left.axis == 1);
  CHECK(left.sign == -1);
  // d=3 windows for the non-e1 axes
  CHECK(attempt_direction(1.5, 0.0, 3).axis == 3);
  CHECK(attempt_direction(1.5, 0.0, 3).sign == +1);
  CHECK(attempt_direction(2.5, 0.0, 3).axis == 2);
  CHECK(attempt_direction(2.5, 0.0, 3).sign == -1);
  CHECK_THROWS_AS(attempt_direction(-0.1, 0.0, 2), AssumptionViolationError);
  CHECK_THROWS_AS(attempt_direction(z_lambda(0.0, 2) + 0.1, 0.0, 2),
                  AssumptionViolationError);
}

TEST_CASE("z_lambda evaluations") {
  CHECK(z_lambda(0.0, 1) == doctest::Approx(2.0));
  CHECK(z_lambda(1.0, 2) == doctest::Approx(std::exp(1.0) + std::exp(-1.0) + 2.0));
  CHECK(z_lambda(1.7, 3) == doctest::Approx(z_lambda(-1.7, 3)));
}

TEST_CASE("direction frequencies match the window lengths") {
  RngStream rng(100, 0);
  const double lambda = 0.7;
  const int d = 3;
  double z = z_lambda(lambda, d);
  const int n = 100000;
  // cells: +e2, +e3, -e2, -e3, +e1, -e1
  std::vector<double> counts(6, 0.0);
  for (int i = 0; i < n; ++i) {
    Direction dir = attempt_direction(rng.uniform(0.0, z), lambda, d);
    int cell = dir.axis == 1 ? (dir.sign > 0 ? 4 : 5)
                             : (dir.axis - 2) + (dir.sign > 0 ? 0 : 2);
    counts[cell] += 1.0;
  }
  std::vector<double> expected = {n / z,  n / z,  n / z,  n / z,
                                  n * std::exp(lambda) / z, n * std::exp(-lambda) / z};
  CHECK(stats::chi2_gof(counts, expected).p_value > 1e-4);
}

TEST_CASE("total_jump_rate examples") {
  SiteView v1;
  v1.d = 1;
  v1.value[0][0] = v1.value[0][1] = 1.0;
  CHECK(total_jump_rate(v1, 1.0) == doctest::Approx(std::exp(1.0) + std::exp(-1.0)));
  CHECK(total_jump_rate(v1, 0.0) == doctest::Approx(2.0));

  SiteView v2;
  v2.d = 2;
  for (int a = 0; a < 2; ++a) v2.value[a][0] = v2.value[a][1] = 1.0;
  CHECK(total_jump_rate(v2, 0.0) == doctest::Approx(4.0));

  SiteView vab;
  vab.d = 1;
  vab.value[0][0] = 0.3;
  vab.value[0][1] = 0.9;
  CHECK(total_jump_rate(vab, 0.0) == doctest::Approx(1.2));
}

TEST_CASE("capability gating") {
  auto percolation = ConductanceLaw::two_point(0.0, 1.0, 0.5, 1.0);
  CHECK_THROWS_AS(
      make_params(WalkerKind::cbrw, 1.0, 1.0, 1, percolation).validate(), CapabilityError);
  auto elliptic = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  CHECK_THROWS_AS(
      make_params(WalkerKind::totally_asymmetric, 0.0, 1.0, 2, elliptic).validate(),
      CapabilityError);
  CHECK_THROWS_AS(make_params(WalkerKind::vbrw, -0.5, 1.0, 1, elliptic).validate(),
                  CapabilityError);
  CHECK_NOTHROW(make_params(WalkerKind::cbrw, -0.5, 1.0, 1, elliptic).validate());
}

TEST_CASE("vbrw basics: full conductance always succeeds, empty horizon") {
  RngStream rng(101, 0);
  auto params = make_params(WalkerKind::vbrw, 0.8, 1.0, 1, ConductanceLaw::point_mass(1.0, 1.0));
  DynEnvironment env(Geometry::lattice(1), 1.0, params.law);
  Trajectory traj = vbrw_run(params, env, 200.0, rng);
  CHECK(traj.attempts == traj.right_successes + traj.left_successes);
  CHECK(traj.attempts > 0);

  env.clear();
  Trajectory empty = vbrw_run(params, env, 0.0, rng);
  CHECK(empty.events.empty());
  CHECK(empty.attempts == 0);
}

TEST_CASE("vbrw attempt rate equals Z_lambda kappa") {
  RngStream rng(102, 0);
  auto params = make_params(WalkerKind::vbrw, 1.0, 1.0, 1,
                            ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0));
  DynEnvironment env(Geometry::lattice(1), 1.0, params.law);
  const double horizon = 3000.0;
  Trajectory traj = vbrw_run(params, env, horizon, rng);
  double expected = z_lambda(1.0, 1) * horizon;
  CHECK(std::fabs(static_cast<double>(traj.attempts) - expected) < 4.0 * std::sqrt(expected));
}

TEST_CASE("per-attempt success probability equals w / kappa") {
  RngStream rng(103, 0);
  auto params =
      make_params(WalkerKind::vbrw, 0.0, 1.0, 1, ConductanceLaw::point_mass(0.5, 1.0));
  DynEnvironment env(Geometry::lattice(1), 1.0, params.law);
  Trajectory traj = vbrw_run(params, env, 5000.0, rng);
  double n = static_cast<double>(traj.attempts);
  double successes = static_cast<double>(traj.right_successes + traj.left_successes);
  CHECK(std::fabs(successes / n - 0.5) < 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("zero bias gives zero mean displacement") {
  RngStream rng(104, 0);
  auto params = make_params(WalkerKind::vbrw, 0.0, 1.0, 1, ConductanceLaw::point_mass(1.0, 1.0));
  DynEnvironment env(Geometry::lattice(1), 1.0, params.law);
  const int runs = 400;
  std::vector<double> xs(runs);
  for (int r = 0; r < runs; ++r) {
    env.clear();
    xs[r] = static_cast<double>(vbrw_run(params, env, 100.0, rng).displacement_e1());
  }
  auto m = stats::moments(xs);
  CHECK(std::fabs(m.mean) < 4.0 * m.se());
}

TEST_CASE("nvbrw is the time-changed vbrw with matched draws") {
  const double lambda = 1.3, mu = 0.8, horizon_v = 50.0;
  const double z = z_lambda(lambda, 1);
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);

  RngStream rng_v(500, 0);
  auto pv = make_params(WalkerKind::vbrw, lambda, z * mu, 1, law);
  DynEnvironment env_v(Geometry::lattice(1), z * mu, law);
  Trajectory tv = vbrw_run(pv, env_v, horizon_v, rng_v);

  RngStream rng_n(500, 0);
  auto pn = make_params(WalkerKind::nvbrw, lambda, mu, 1, law);
  DynEnvironment env_n(Geometry::lattice(1), mu, law);
  Trajectory tn = nvbrw_run(pn, env_n, horizon_v * z, rng_n);

  REQUIRE(tv.events.size() == tn.events.size());
  for (std::size_t i = 0; i < tv.events.size(); ++i) {
    CHECK(tv.events[i].axis == tn.events[i].axis);
    CHECK(tv.events[i].success == tn.events[i].success);
    CHECK(tn.events[i].time == doctest::Approx(tv.events[i].time * z).epsilon(1e-9));
  }
  CHECK(tv.final_position == tn.final_position);
}

TEST_CASE("nvbrw at large bias approaches unit speed on unit conductances") {
  RngStream rng(112, 0);
  auto law = ConductanceLaw::point_mass(1.0, 1.0);
  auto params = make_params(WalkerKind::nvbrw, 8.0, 1.0, 1, law);
  DynEnvironment env(Geometry::lattice(1), 1.0, law);
  const double horizon = 5000.0;
  Trajectory traj = nvbrw_run(params, env, horizon, rng);
  // almost every attempt is rightward and every attempt succeeds
  CHECK(std::fabs(static_cast<double>(traj.displacement_e1()) / horizon - 1.0) < 0.02);
}

TEST_CASE("nvbrw attempt rate is kappa") {
  RngStream rng(105, 0);
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 2.0);  // kappa = 2
  auto params = make_params(WalkerKind::nvbrw, 2.0, 1.0, 1, law);
  DynEnvironment env(Geometry::lattice(1), 1.0, law);
  const double horizon = 2000.0;
  Trajectory traj = nvbrw_run(params, env, horizon, rng);
  double expected = 2.0 * horizon;
  CHECK(std::fabs(static_cast<double>(traj.attempts) - expected) < 4.0 * std::sqrt(expected));
}

TEST_CASE("cbrw inter-jump times are exponential(1)") {
  RngStream rng(106, 0);
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  auto params = make_params(WalkerKind::cbrw, 0.5, 1.0, 2, law);
  DynEnvironment env(Geometry::lattice(2), 1.0, law);
  Trajectory traj = cbrw_run(params, env, 20000.0, rng);
  std::vector<double> gaps;
  double prev = 0.0;
  for (const auto& ev : traj.events) {
    gaps.push_back(ev.time - prev);
    prev = ev.time;
    CHECK(ev.success);  // every epoch moves
  }
  auto ks = stats::ks_test(gaps, [](double v) { return 1.0 - std::exp(-v); });
  CHECK(ks.p_value > 1e-4);
}

TEST_CASE("cbrw jump distribution on a fixed view") {
  RngStream rng(107, 0);
  SiteView view;
  view.d = 1;
  view.value[0][0] = 3.0;  // right edge
  view.value[0][1] = 1.0;  // left edge
  const int n = 100000;
  int right = 0;
  for (int i = 0; i < n; ++i)
    if (choose_neighbor(view, 0.0, rng).sign > 0) ++right;
  // lambda = 0: P(right) = 3/4
  CHECK(std::fabs(static_cast<double>(right) / n - 0.75) <
        4.0 * std::sqrt(0.75 * 0.25 / n));

  // constant conductances: P(right) = e^l / (e^l + e^-l)
  view.value[0][1] = 3.0;
  const double lambda = 1.0;
  double p = std::exp(lambda) / (std::exp(lambda) + std::exp(-lambda));
  right = 0;
  for (int i = 0; i < n; ++i)
    if (choose_neighbor(view, lambda, rng).sign > 0) ++right;
  CHECK(std::fabs(static_cast<double>(right) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("cbrw zero-bias symmetry") {
  RngStream rng(108, 0);
  auto law = ConductanceLaw::uniform_interval(0.2, 1.0, 1.0);
  auto params = make_params(WalkerKind::cbrw, 0.0, 1.0, 1, law);
  DynEnvironment env(Geometry::lattice(1), 1.0, law);
  const int runs = 500;
  std::vector<double> xs(runs);
  for (int r = 0; r < runs; ++r) {
    env.clear();
    xs[r] = static_cast<double>(cbrw_run_jumps(params, env, 40, rng).displacement_e1());
  }
  auto m = stats::moments(xs);
  CHECK(std::fabs(m.mean) < 4.0 * m.se());
}

TEST_CASE("totally asymmetric walk is monotone and counts successes") {
  RngStream rng(109, 0);
  auto law = ConductanceLaw::point_mass(1.0, 1.0);  // full conductance
  auto params = make_params(WalkerKind::totally_asymmetric, 0.0, 1.0, 1, law);
  DynEnvironment env(Geometry::lattice(1), 1.0, law);
  Trajectory traj = tasym_run(params, env, 500.0, rng);
  CHECK(traj.displacement_e1() == static_cast<std::int64_t>(traj.attempts));

  auto perc = ConductanceLaw::two_point(0.0, 1.0, 0.5, 1.0);
  auto p2 = make_params(WalkerKind::totally_asymmetric, 0.0, 1.0, 1, perc);
  DynEnvironment env2(Geometry::lattice(1), 1.0, perc);
  Trajectory t2 = tasym_run(p2, env2, 2000.0, rng);
  std::int64_t pos = 0;
  for (const auto& ev : t2.events) {
    CHECK(ev.axis == 1);
    if (ev.success) ++pos;
    CHECK(pos >= 0);
  }
  CHECK(pos == t2.displacement_e1());
}

TEST_CASE("trajectory times are strictly increasing") {
  RngStream rng(110, 0);
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  for (WalkerKind kind : {WalkerKind::vbrw, WalkerKind::nvbrw, WalkerKind::cbrw,
                          WalkerKind::totally_asymmetric}) {
    auto params = make_params(kind, 0.5, 1.0, 1, law);
    DynEnvironment env(Geometry::lattice(1), 1.0, law);
    Trajectory traj = run_walk(params, env, 300.0, rng);
    for (std::size_t i = 1; i < traj.events.size(); ++i)
      REQUIRE(traj.events[i].time > traj.events[i - 1].time);
  }
}

TEST_CASE("non-e1 axis attempts are exchangeable") {
  RngStream rng(111, 0);
  auto law = ConductanceLaw::point_mass(1.0, 1.0);
  auto params = make_params(WalkerKind::vbrw, 1.0, 1.0, 3, law);
  DynEnvironment env(Geometry::lattice(3), 1.0, law);
  Trajectory traj = vbrw_run(params, env, 3000.0, rng);
  std::vector<double> counts(4, 0.0);  // +e2, -e2, +e3, -e3
  for (const auto& ev : traj.events) {
    int a = std::abs(ev.axis);
    if (a == 1) continue;
    counts[(a - 2) * 2 + (ev.axis > 0 ? 0 : 1)] += 1.0;
  }
  double total = counts[0] + counts[1] + counts[2] + counts[3];
  std::vector<double> expected(4, total / 4.0);
  CHECK(stats::chi2_gof(counts, expected).p_value > 1e-4);
}
