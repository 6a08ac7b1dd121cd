#include "dynwalk/conductance_law.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

constexpr double kProbTol = 1e-12;

double evaluate(MomentFunctional f, double w, double mu, double m) {
  double s = mu + w;
  switch (f) {
    case MomentFunctional::inv1: return 1.0 / s;
    case MomentFunctional::ratio: return w / s;
    case MomentFunctional::inv2: return 1.0 / (s * s);
    case MomentFunctional::ratio2: return w / (s * s);
    case MomentFunctional::centered_ratio2: return w * (w - m) / (s * s);
    case MomentFunctional::centered_inv2: return (w - m) / (s * s);
    case MomentFunctional::mean: return w;
    case MomentFunctional::abslog: return std::fabs(std::log(w));
  }
  return 0.0;
}

// Adaptive Simpson with absolute tolerance.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fb,
               double fm, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson(f, a, m, fa, fm, flm, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, fb, frm, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  double m = 0.5 * (a + b);
  return simpson(f, a, b, f(a), f(b), f(m), tol, 48);
}

// Antiderivative of |log x| with F(0) = 0; exact, avoids the endpoint
// singularity that plain quadrature handles poorly.
double abslog_antideriv(double x) {
  if (x <= 0.0) return 0.0;
  if (x <= 1.0) return x - x * std::log(x);
  return x * std::log(x) - x + 2.0;
}

}  // namespace

ConductanceLaw ConductanceLaw::finite_discrete(std::vector<Atom> atoms, double kappa) {
  ConductanceLaw law;
  law.discrete_ = true;
  law.atoms_ = std::move(atoms);
  law.kappa_ = kappa;
  law.check_and_finish();
  return law;
}

ConductanceLaw ConductanceLaw::uniform_interval(double lo, double hi, double kappa) {
  ConductanceLaw law;
  law.discrete_ = false;
  law.lo_ = lo;
  law.hi_ = hi;
  law.kappa_ = kappa;
  law.check_and_finish();
  return law;
}

ConductanceLaw ConductanceLaw::point_mass(double value, double kappa) {
  return finite_discrete({{value, 1.0}}, kappa);
}

ConductanceLaw ConductanceLaw::two_point(double a, double b, double prob_a, double kappa) {
  return finite_discrete({{a, prob_a}, {b, 1.0 - prob_a}}, kappa);
}

void ConductanceLaw::check_and_finish() {
  if (!(kappa_ > 0.0)) throw ConstructionError("conductance law: kappa must be positive");
  if (discrete_) {
    if (atoms_.empty()) throw ConstructionError("conductance law: no atoms");
    double total = 0.0;
    double min_pos = std::numeric_limits<double>::infinity();
    bool has_zero_atom = false;
    bool has_positive = false;
    for (const Atom& a : atoms_) {
      if (a.value < 0.0) throw ConstructionError("conductance law: negative atom value");
      if (a.value > kappa_) throw ConstructionError("conductance law: atom above kappa");
      if (!(a.prob > 0.0 && a.prob <= 1.0))
        throw ConstructionError("conductance law: atom probability outside (0,1]");
      total += a.prob;
      if (a.value == 0.0) has_zero_atom = true;
      else {
        has_positive = true;
        min_pos = std::min(min_pos, a.value);
      }
    }
    if (std::fabs(total - 1.0) > kProbTol)
      throw ConstructionError("conductance law: atom probabilities do not sum to 1");
    if (!has_positive) throw ConstructionError("conductance law: must not be a point mass at 0");
    caps_.bounded_support = true;
    caps_.zero_free = !has_zero_atom;
    caps_.uniformly_elliptic = !has_zero_atom;
    caps_.log_moment_finite = !has_zero_atom;
  } else {
    if (lo_ < 0.0) throw ConstructionError("conductance law: interval below 0");
    if (!(hi_ > lo_)) throw ConstructionError("conductance law: interval needs hi > lo");
    if (hi_ > kappa_) throw ConstructionError("conductance law: interval above kappa");
    caps_.bounded_support = true;
    // An endpoint at 0 has measure zero, so the law is zero-free and
    // |log w| stays integrable even when lo = 0.
    caps_.zero_free = true;
    caps_.uniformly_elliptic = lo_ > 0.0;
    caps_.log_moment_finite = true;
  }
}

double ConductanceLaw::sample(RngStream& rng) const {
  if (!discrete_) return rng.uniform(lo_, hi_);
  if (atoms_.size() == 1) return atoms_[0].value;
  double u = rng.uniform();
  double acc = 0.0;
  for (const Atom& a : atoms_) {
    acc += a.prob;
    if (u < acc) return a.value;
  }
  return atoms_.back().value;
}

double ConductanceLaw::moment(MomentFunctional f, double mu) const {
  if (!(mu > 0.0)) throw AssumptionViolationError("moment: mu must be positive");
  if (f == MomentFunctional::abslog && !caps_.zero_free)
    throw AssumptionViolationError("moment: |log w| undefined for a law with an atom at 0");

  double m = 0.0;
  if (f == MomentFunctional::centered_ratio2 || f == MomentFunctional::centered_inv2)
    m = moment(MomentFunctional::mean, mu);

  if (discrete_) {
    double acc = 0.0;
    for (const Atom& a : atoms_) acc += a.prob * evaluate(f, a.value, mu, m);
    return acc;
  }
  double width = hi_ - lo_;
  if (f == MomentFunctional::abslog)
    return (abslog_antideriv(hi_) - abslog_antideriv(lo_)) / width;
  // The tolerance undershoots the documented 1e-10 so algebraic identities
  // between separately integrated moments survive at the 1e-12 level.
  auto integrand = [&](double w) { return evaluate(f, w, mu, m); };
  return integrate(integrand, lo_, hi_, 1e-13) / width;
}

}  // namespace dynwalk
