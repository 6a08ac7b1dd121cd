#include "dynwalk/closed_forms.hpp"

#include <cmath>

#include "dynwalk/errors.hpp"

namespace dynwalk::closed_forms {

namespace {
using MF = MomentFunctional;
}

double z_lambda(double lambda, int d) {
  return 2.0 * d - 2.0 + std::exp(lambda) + std::exp(-lambda);
}

RegenMoments vbrw_regen_moments(double lambda, double mu, double kappa, int d) {
  if (!(mu > 0.0) || !(kappa > 0.0))
    throw AssumptionViolationError("vbrw_regen_moments: mu and kappa must be positive");
  double rate = kappa * z_lambda(lambda, d);
  double en = std::exp(rate / mu);
  return {en / rate, en};
}

RegenMoments nvbrw_regen_moments(double mu, double kappa) {
  if (!(mu > 0.0) || !(kappa > 0.0))
    throw AssumptionViolationError("nvbrw_regen_moments: mu and kappa must be positive");
  double en = std::exp(kappa / mu);
  return {en / kappa, en};
}

double v_asym(const ConductanceLaw& law, double mu) {
  return law.moment(MF::ratio, mu) / law.moment(MF::inv1, mu);
}

AsymptoticCoefficients nvbrw_expansion(const ConductanceLaw& law, double mu, int d) {
  double inv1 = law.moment(MF::inv1, mu);
  double ratio = law.moment(MF::ratio, mu);
  double cr2 = law.moment(MF::centered_ratio2, mu);
  double ci2 = law.moment(MF::centered_inv2, mu);
  double first = (2.0 * d - 2.0) * (cr2 * inv1 - ci2 * ratio - ratio * inv1) / (inv1 * inv1);
  return {ratio / inv1, first};
}

double alt_first_order(const ConductanceLaw& law, double mu) {
  double m = law.moment(MF::mean, mu);
  double inv1 = law.moment(MF::inv1, mu);
  double inv2 = law.moment(MF::inv2, mu);
  double ratio = law.moment(MF::ratio, mu);
  double ratio2 = law.moment(MF::ratio2, mu);
  return (m + mu) * (inv2 * ratio - ratio2 * inv1) / (inv1 * inv1) - ratio / inv1;
}

double two_point_A(double mu, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(mu > 0.0))
    throw AssumptionViolationError("two_point_A: need alpha in (0,1) and mu > 0");
  return (alpha * alpha - (2.0 * mu + 6.0) * alpha + 1.0 - 2.0 * mu) /
         (2.0 * (2.0 * mu + 1.0 + alpha));
}

double vbrw_expansion(const ConductanceLaw& law, double mu, int d, double lambda) {
  double inv1 = law.moment(MF::inv1, mu);
  double ratio = law.moment(MF::ratio, mu);
  double cr2 = law.moment(MF::centered_ratio2, mu);
  double ci2 = law.moment(MF::centered_inv2, mu);
  double second = (2.0 * d - 2.0) * (cr2 * inv1 - ci2 * ratio) / (inv1 * inv1);
  return std::exp(lambda) * ratio / inv1 + second;
}

double bd_discrete_return_mean(double rate_ratio) {
  if (!(rate_ratio > 0.0))
    throw AssumptionViolationError("bd_discrete_return_mean: ratio must be positive");
  return 2.0 * std::exp(rate_ratio);
}

double delta_of_lambda(double lambda, int d) {
  return (2.0 * d - 2.0) / z_lambda(lambda, d);
}

}  // namespace dynwalk::closed_forms
