#include <doctest.h>

#include <cmath>

#include "dynwalk/closed_forms.hpp"
#include "dynwalk/errors.hpp"
#include "dynwalk/rng.hpp"

using namespace dynwalk;
namespace cf = closed_forms;

namespace {

ConductanceLaw random_two_point(RngStream& rng) {
  double a = 0.02 + 0.9 * rng.uniform();
  double b = a + 0.05 + rng.uniform();
  double p = 0.1 + 0.8 * rng.uniform();
  return ConductanceLaw::two_point(a, b, p, b);
}

}  // namespace

TEST_CASE("regeneration moment formulas") {
  // kappa Z / mu = 1
  auto m = cf::vbrw_regen_moments(0.0, 2.0, 1.0, 1);
  CHECK(m.expected_tau == doctest::Approx(std::exp(1.0) / 2.0).epsilon(1e-14));
  CHECK(m.expected_attempts == doctest::Approx(std::exp(1.0)).epsilon(1e-14));

  // mu -> infinity: one attempt per cycle
  CHECK(cf::vbrw_regen_moments(1.0, 1e9, 1.0, 2).expected_attempts ==
        doctest::Approx(1.0).epsilon(1e-6));

  // algebraic relation E[tau] * kappa Z = E[N], and the doubled discrete
  // return mean
  RngStream rng(42, 0);
  for (int i = 0; i < 100; ++i) {
    double lam = 3.0 * rng.uniform();
    double mu = 0.2 + 5.0 * rng.uniform();
    double kappa = 0.2 + 3.0 * rng.uniform();
    int d = 1 + static_cast<int>(rng.uniform_below(4));
    auto rm = cf::vbrw_regen_moments(lam, mu, kappa, d);
    double rate = kappa * cf::z_lambda(lam, d);
    CHECK(rm.expected_tau * rate == doctest::Approx(rm.expected_attempts).epsilon(1e-12));
    CHECK(cf::bd_discrete_return_mean(rate / mu) ==
          doctest::Approx(2.0 * rm.expected_attempts).epsilon(1e-12));
  }

  auto nm = cf::nvbrw_regen_moments(2.0, 1.0);  // kappa/mu = 1/2
  CHECK(nm.expected_attempts == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
  CHECK(nm.expected_tau == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
}

TEST_CASE("bd_discrete_return_mean examples") {
  CHECK(cf::bd_discrete_return_mean(1.0) == doctest::Approx(2.0 * std::exp(1.0)));
  CHECK(cf::bd_discrete_return_mean(1e-12) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(cf::bd_discrete_return_mean(0.0), AssumptionViolationError);
}

TEST_CASE("totally asymmetric speed formula") {
  auto delta1 = ConductanceLaw::point_mass(1.0, 1.0);
  CHECK(cf::v_asym(delta1, 0.37) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(cf::v_asym(delta1, 5.0) == doctest::Approx(1.0).epsilon(1e-13));

  auto perc = ConductanceLaw::two_point(0.0, 1.0, 0.5, 1.0);
  CHECK(cf::v_asym(perc, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

  auto tp = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  // E[w/(mu+w)] = (0.05/0.2 + 0.5/1.1), E[1/(mu+w)] = (0.5/0.2 + 0.5/1.1)
  double num = 0.5 * (0.1 / 0.2 + 1.0 / 1.1);
  double den = 0.5 * (1.0 / 0.2 + 1.0 / 1.1);
  CHECK(cf::v_asym(tp, 0.1) == doctest::Approx(num / den).epsilon(1e-13));
  CHECK(num / den == doctest::Approx(0.23846).epsilon(1e-4));
}

TEST_CASE("expansion coefficients") {
  auto delta1 = ConductanceLaw::point_mass(1.0, 1.0);
  // constant conductances: centered moments vanish, first = -(2d-2)
  for (double mu : {0.2, 1.0, 3.0}) {
    auto co = cf::nvbrw_expansion(delta1, mu, 2);
    CHECK(co.zeroth == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(co.first == doctest::Approx(-2.0).epsilon(1e-12));
  }
  // d = 1: the factor 2d-2 kills the first-order term
  CHECK(cf::nvbrw_expansion(ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0), 1.0, 1).first ==
        doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("alternative first-order representation") {
  auto delta1 = ConductanceLaw::point_mass(1.0, 1.0);
  CHECK(cf::alt_first_order(delta1, 0.7) == doctest::Approx(-1.0).epsilon(1e-12));

  RngStream rng(7, 0);
  for (int i = 0; i < 100; ++i) {
    ConductanceLaw law = random_two_point(rng);
    double mu = 0.05 + 9.9 * rng.uniform();
    int d = 2 + static_cast<int>(rng.uniform_below(3));
    double lhs = cf::nvbrw_expansion(law, mu, d).first;
    double rhs = (2.0 * d - 2.0) * cf::alt_first_order(law, mu);
    CHECK(std::fabs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("two-point coefficient A(mu, alpha)") {
  CHECK(cf::two_point_A(0.1, 0.1) == doctest::Approx(0.19 / 2.6).epsilon(1e-13));
  CHECK(cf::two_point_A(0.1, 0.1) > 0.0);
  CHECK(cf::two_point_A(1.0, 1.0 - 1e-12) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(cf::two_point_A(1.0, 1.5), AssumptionViolationError);

  // specialization: alt_first_order on (d_alpha + d_1)/2 equals A(mu, alpha)
  RngStream rng(8, 0);
  for (int i = 0; i < 100; ++i) {
    double mu = 0.05 + 9.9 * rng.uniform();
    double alpha = 0.01 + 0.98 * rng.uniform();
    auto law = ConductanceLaw::two_point(alpha, 1.0, 0.5, 1.0);
    CHECK(std::fabs(cf::alt_first_order(law, mu) - cf::two_point_A(mu, alpha)) <= 1e-12);
  }
}

TEST_CASE("variable speed expansion") {
  auto delta1 = ConductanceLaw::point_mass(1.0, 1.0);
  for (double lam : {1.0, 2.5, 4.0})
    CHECK(cf::vbrw_expansion(delta1, 1.0, 1, lam) ==
          doctest::Approx(std::exp(lam)).epsilon(1e-12));

  // the normalized and variable expansions agree to O(e^-lambda):
  // Z * (zeroth + first e^-l) - vbrw_expansion stays bounded by C e^-l
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  double mu = 0.7;
  int d = 2;
  auto co = cf::nvbrw_expansion(law, mu, d);
  double prev_ratio = 0.0;
  for (double lam : {3.0, 4.0, 5.0, 6.0, 7.0, 8.0}) {
    double z = cf::z_lambda(lam, d);
    double nv = z * (co.zeroth + co.first * std::exp(-lam));
    double vb = cf::vbrw_expansion(law, mu, d, lam);
    double scaled = std::fabs(nv - vb) / std::exp(-lam);
    if (prev_ratio > 0.0) CHECK(scaled < 4.0 * prev_ratio);  // stays O(e^-lambda)
    prev_ratio = std::max(prev_ratio, scaled);
  }
}

TEST_CASE("sign predictions for asymptotic monotonicity") {
  // two-point law at alpha = mu = 0.1: coefficient positive, speed
  // asymptotically decreasing
  CHECK(cf::two_point_A(0.1, 0.1) > 0.0);
  // constant conductances: coefficient negative for every mu tested
  auto delta1 = ConductanceLaw::point_mass(1.0, 1.0);
  for (double mu = 0.05; mu < 12.0; mu += 0.25) CHECK(cf::alt_first_order(delta1, mu) < 0.0);
}

TEST_CASE("formulas are continuous in mu") {
  auto law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
  double step = 1e-6;
  for (double mu : {0.1, 0.5, 1.0, 5.0}) {
    CHECK(std::fabs(cf::v_asym(law, mu + step) - cf::v_asym(law, mu)) < 1e-4);
    CHECK(std::fabs(cf::alt_first_order(law, mu + step) - cf::alt_first_order(law, mu)) < 1e-4);
    CHECK(std::fabs(cf::vbrw_expansion(law, mu + step, 2, 2.0) -
                    cf::vbrw_expansion(law, mu, 2, 2.0)) < 1e-3);
  }
}

TEST_CASE("delta_of_lambda decays to zero") {
  CHECK(cf::delta_of_lambda(0.0, 2) == doctest::Approx(0.5));
  CHECK(cf::delta_of_lambda(10.0, 2) < 1e-3);
  CHECK(cf::delta_of_lambda(3.0, 1) == doctest::Approx(0.0));
}
