#include "dynwalk/birth_death.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dynwalk/errors.hpp"
#include "dynwalk/stats.hpp"

namespace dynwalk {

void BDParams::validate() const {
  if (!(alpha > 0.0) || !(mu > 0.0)) throw ConstructionError("bd chain: rates must be positive");
  if (L < 1) throw ConstructionError("bd chain: batch size must be >= 1");
}

BDReturn simulate_bd_return(const BDParams& params, RngStream& rng, std::uint64_t step_cap) {
  params.validate();
  BDReturn out;
  std::int64_t state = 0;
  for (;;) {
    double death = params.mu * static_cast<double>(state);
    double total = params.alpha + death;
    out.tau += rng.exponential(total);
    bool birth = state == 0 || rng.uniform() * total < params.alpha;
    state += birth ? params.L : -1;
    ++out.steps;
    if (out.steps > step_cap) throw CycleOverflowError("bd chain: step cap exceeded");
    if (state == 0) return out;
  }
}

TailFit tail_exponent_fit(std::span<const double> samples) {
  if (samples.size() < 100)
    throw InsufficientSamplesError("tail_exponent_fit: need at least 100 samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  std::size_t n = s.size();
  std::size_t lo = n / 2, hi = static_cast<std::size_t>(0.99 * static_cast<double>(n));
  if (hi >= n - 1) hi = n - 2;
  std::vector<double> xs, ys;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (i + 1 < n && s[i] == s[i + 1]) continue;  // dedupe plateau points
    double surv = static_cast<double>(n - 1 - i) / static_cast<double>(n);
    if (surv <= 0.0) break;
    xs.push_back(s[i]);
    ys.push_back(std::log(surv));
  }
  if (xs.size() < 3 || xs.front() == xs.back())
    throw AssumptionViolationError("tail_exponent_fit: degenerate samples");
  stats::LinFit fit = stats::linear_fit(xs, ys);
  return {-fit.slope, fit.r2};
}

void RWParams::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw ConstructionError("rw: p must lie in (0,1)");
  if (L < 1) throw ConstructionError("rw: L must be >= 1");
  if (!(drift() < 0.0)) throw ConstructionError("rw: drift must be negative");
}

LargeDeviationRate ld_lambda_star(const RWParams& params, double y) {
  params.validate();
  if (!(y > params.drift() && y < 0.0))
    throw AssumptionViolationError("ld_lambda_star: y must lie strictly between the drift and 0");
  double arg = params.p * (1.0 + y) / ((params.L - y) * (1.0 - params.p));
  if (!(arg > 0.0)) throw AssumptionViolationError("ld_lambda_star: log argument not positive");
  double lam = std::log(arg) / (params.L + 1.0);
  double mgf = params.p * std::exp(-lam) + (1.0 - params.p) * std::exp(params.L * lam);
  double rate = lam * y - std::log(mgf);
  if (!(rate > 0.0))
    throw AssumptionViolationError("ld_lambda_star: certified rate is not positive");
  return {lam, rate};
}

std::uint64_t simulate_rw_hitting(const RWParams& params, RngStream& rng,
                                  std::uint64_t step_cap) {
  params.validate();
  std::int64_t x = 0;
  std::uint64_t n = 0;
  while (x != -params.L) {
    x += rng.uniform() < params.p ? -1 : params.L;
    if (x < -params.L) throw AssumptionViolationError("rw hitting: skipped the target level");
    ++n;
    if (n > step_cap) throw CycleOverflowError("rw hitting: step cap exceeded");
  }
  return n;
}

}  // namespace dynwalk
