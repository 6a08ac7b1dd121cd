#pragma once

// Closed-form quantities: expected regeneration moments, the totally
// asymmetric speed, the large-bias expansion of the normalized walk's speed
// with its alternative first-order representation, and the two-point-law
// coefficient. Pure functions of the law and the parameters; they act as
// oracles for the simulators.

#include "dynwalk/conductance_law.hpp"

namespace dynwalk::closed_forms {

// Z_lambda = 2d - 2 + e^lambda + e^-lambda.
double z_lambda(double lambda, int d);

struct RegenMoments {
  double expected_tau;
  double expected_attempts;
};

// E[tau] = e^{kappa Z / mu} / (kappa Z) and E[N] = e^{kappa Z / mu} for the
// variable speed walk. The normalized walk attempts at rate kappa instead,
// which amounts to Z -> 1; it is exposed as a separate entry point because
// both processes coexist in experiments.
RegenMoments vbrw_regen_moments(double lambda, double mu, double kappa, int d);
RegenMoments nvbrw_regen_moments(double mu, double kappa);

// v_A(mu) = E[w/(mu+w)] / E[1/(mu+w)], the d=1 totally asymmetric speed and
// the lambda -> infinity limit of the normalized speed.
double v_asym(const ConductanceLaw& law, double mu);

struct AsymptoticCoefficients {
  double zeroth;  // lambda -> infinity limit of the normalized speed
  double first;   // coefficient of e^{-lambda}
};

// Expansion of the normalized speed: zeroth + first * e^{-lambda} + O(e^-2l).
AsymptoticCoefficients nvbrw_expansion(const ConductanceLaw& law, double mu, int d);

// Alternative representation of the first-order term; equals
// nvbrw_expansion(...).first / (2d - 2).
double alt_first_order(const ConductanceLaw& law, double mu);

// A(mu, alpha) = (alpha^2 - (2mu+6)alpha + 1 - 2mu) / (2(2mu+1+alpha)),
// the alt_first_order value of the two-point law (d_alpha + d_1)/2.
double two_point_A(double mu, double alpha);

// The two displayed terms of the variable speed expansion of v(lambda, Z mu):
// e^lambda v_A + (2d-2) * [...]; remainder O(e^{-lambda}) omitted.
double vbrw_expansion(const ConductanceLaw& law, double mu, int d, double lambda);

// Mean first return time to 0 of the discretized infected-size chain,
// 2 e^{rate_ratio} with rate_ratio = kappa Z / mu; equals twice E[N].
double bd_discrete_return_mean(double rate_ratio);

// delta(lambda) = (2d-2)/Z_lambda, the small parameter of the expansion.
double delta_of_lambda(double lambda, int d);

}  // namespace dynwalk::closed_forms
