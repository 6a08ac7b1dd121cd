#pragma once

// Statistical checks of the structural claims: detailed balance of the
// torus walk, stationarity of the environment, the constant speed walk's
// path likelihood ratio and its symmetry/positivity consequences.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dynwalk/regeneration.hpp"
#include "dynwalk/walkers.hpp"

namespace dynwalk {

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t n_samples = 0;
  std::string notes;
};

// The tilted counting measure pi(x) = e^{2 lambda x.e_1} of the torus walk.
struct BiasMeasure {
  double lambda = 0.0;
  double evaluate(std::int64_t x_dot_e1) const;
};

struct DisplacementPairStat {
  std::array<std::int64_t, kMaxDim> x{};  // tested displacement (x vs -x)
  std::uint64_t count_pos = 0, count_neg = 0;
  double target_ratio = 1.0;
  double ratio = 0.0;         // empirical count_pos / count_neg
  double ratio_ci_low = 0.0;  // 99% log-scale interval
  double ratio_ci_high = 0.0;
  double z = 0.0;  // conditional two-proportion statistic
  bool tested = false;  // false when counts were too small for power
};

struct DetailedBalanceReport {
  TestReport report;
  std::vector<DisplacementPairStat> pairs;
};

// Estimates the time-t displacement distribution of the Z^d-valued walk on
// a periodic environment over n_samples independent runs and tests
// p_t(0,x) = e^{2 lambda x.e_1} p_t(0,-x) for every displacement pair with
// |x.e_1| <= 3 and adequate counts (expected cell count >= 20), with a
// Bonferroni-corrected 99% level. Pairs without adequate counts produce a
// power warning in the notes, not a failure.
DetailedBalanceReport detailed_balance_test(int M, int d, double lambda, double mu,
                                            const ConductanceLaw& law, double t,
                                            std::uint64_t n_samples, RngStream& rng);

// Exact product dP^lambda / dP^{-lambda} along a nearest-neighbor path;
// views[k] holds the 2d incident conductances at path[k] at jump k+1.
double cbrw_path_likelihood_ratio(const std::vector<Site>& path,
                                  const std::vector<SiteView>& views, double lambda);

// Mean displacement after n steps under bias lambda plus the same under
// -lambda should vanish; tested at 4 combined standard errors.
TestReport cbrw_symmetry_test(std::uint64_t n_steps, double lambda, double mu,
                              const ConductanceLaw& law, std::uint64_t n_samples,
                              RngStream& rng);

// 99% lower confidence bound of the regenerative speed estimate must be
// positive. lambda = 0 yields a not-applicable (passing) report.
TestReport speed_positivity_test(WalkerKind kind, double lambda, double mu,
                                 const ConductanceLaw& law, std::uint64_t n_cycles,
                                 std::uint64_t seed, unsigned workers, int d = 1);

// Chi-square of the empirical single-edge marginal at time t against the
// law, plus a contingency test of independence across three edges.
TestReport stationarity_test(double mu, const ConductanceLaw& law, double t,
                             std::uint64_t n_replicas, RngStream& rng);

// Frozen-environment oracle: over all length-3 paths of a d=1 environment,
// P^lambda(path) must equal P^{-lambda}(path) * likelihood ratio to 1e-12.
TestReport cbrw_frozen_path_check(double lambda, const ConductanceLaw& law, RngStream& rng);

// Statistical companion: ratio-weighted path indicators sampled under
// P^{-lambda} reproduce P^{lambda} path probabilities within 4 sigma.
TestReport cbrw_reweighted_path_test(double lambda, const ConductanceLaw& law,
                                     std::uint64_t n_samples, RngStream& rng);

}  // namespace dynwalk
