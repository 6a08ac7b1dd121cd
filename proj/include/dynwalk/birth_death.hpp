#pragma once

// Auxiliary chains behind the regeneration-time tail bounds: the batch-birth
// linear-death chain (births of size L at rate alpha, per-individual deaths
// at rate mu) and the drifted skip-free random walk whose hitting time
// controls the chain's excursions.

#include <cstdint>
#include <span>

#include "dynwalk/rng.hpp"

namespace dynwalk {

struct BDParams {
  double alpha = 1.0;  // batch birth rate
  double mu = 1.0;     // per-individual death rate
  int L = 1;           // batch size

  void validate() const;
};

struct BDReturn {
  double tau = 0.0;       // continuous first return time to 0 after leaving
  std::uint64_t steps = 0;  // embedded-chain return step count T
};

// Simulates the chain from 0 until it returns to 0 after leaving it. The
// embedded step count is read off the same path, so (tau, T) are jointly
// consistent.
BDReturn simulate_bd_return(const BDParams& params, RngStream& rng,
                            std::uint64_t step_cap = 100000000ULL);

struct TailFit {
  double rate = 0.0;  // fitted exponential tail rate (positive = decaying)
  double r_squared = 0.0;
};

// Least-squares slope of the log empirical survival over the [50%, 99%]
// quantile range; the rate is minus that slope.
TailFit tail_exponent_fit(std::span<const double> samples);

struct RWParams {
  double p = 0.9;  // probability of a -1 step; 1-p gives a +L step
  int L = 1;

  double drift() const { return -p + L * (1.0 - p); }
  void validate() const;  // requires drift < 0
};

struct LargeDeviationRate {
  double lambda_star = 0.0;
  double rate = 0.0;  // I(y) = lambda* y - log E[e^{lambda* xi}], positive
};

// The tilting point lambda* = log(p(1+y) / ((L-y)(1-p))) / (L+1) and the
// large-deviation rate it certifies. y must lie strictly between the drift
// and 0 and keep the log argument positive.
LargeDeviationRate ld_lambda_star(const RWParams& params, double y);

// First n with X_n - X_0 = -L for the skip-free walk; used to check the
// exponential tail numerically.
std::uint64_t simulate_rw_hitting(const RWParams& params, RngStream& rng,
                                  std::uint64_t step_cap = 100000000ULL);

}  // namespace dynwalk
