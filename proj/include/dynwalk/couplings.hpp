#pragma once

// Executable couplings: the d=1 monotone coupling of two variable speed
// walks with different biases, the domination of a normalized walk by the
// totally asymmetric walk, the two-bias pair construction with good / bad /
// very bad attempt points, and the dimension-reduction gap experiment.

#include <cstdint>
#include <optional>
#include <vector>

#include "dynwalk/regeneration.hpp"
#include "dynwalk/walkers.hpp"

namespace dynwalk {

struct SharedEvent {
  double time;
  double u;
  double v;
  int case_id;  // 0 when the coupling has no case structure
};

struct CoupledPair {
  Trajectory traj_a;  // lower-bias walker (or the dominated walker)
  Trajectory traj_b;  // higher-bias walker (or the dominating walker)
  std::vector<SharedEvent> shared_events;
  std::optional<double> decoupling_time;
  std::uint64_t dominance_violations = 0;  // events where a <= b failed
};

// Shared clock at rate kappa(e^{lambda+eps} + e^{-lambda}); one uniform
// split decides who attempts in which direction, one shared success draw is
// checked against each walker's own edge. Guarantees a <= b pathwise.
CoupledPair coupled_monotone_d1(double lambda, double epsilon, double mu,
                                const ConductanceLaw& law, double horizon, RngStream& rng);

// Shared clock at rate kappa; the totally asymmetric walker b always
// attempts right, the normalized walker a splits [0, e^l + e^-l].
// Guarantees b >= a pathwise.
CoupledPair coupled_nvbrw_dominated_by_tasym(double lambda, double mu,
                                             const ConductanceLaw& law, double horizon,
                                             RngStream& rng);

enum class PointKind { good, bad, very_bad };

struct PointRates {
  double r_good;
  double r_bad;
  double r_very_bad;  // they sum to kappa exactly
};

PointRates point_rates(double lambda, double epsilon, int d, double kappa);

struct PointClass {
  PointKind kind;
  int case_id;  // 1..5 as laid out below
};

// Partition of [0,1] by the five joint direction cases:
//   (1) both walkers attempt a shared non-e_1 direction          [bad]
//   (2) lower non-e_1, higher +e_1                               [very bad]
//   (3) both -e_1                                                [bad]
//   (4) lower -e_1, higher +e_1                                  [very bad]
//   (5) both +e_1                                                [good]
// Interval lengths are derived from the rates, which are self-consistent.
PointClass classify_point(double u, double lambda, double epsilon, int d);

struct BiasPairCycle {
  RegenCycleRecord low;   // bias lambda
  RegenCycleRecord high;  // bias lambda + epsilon
  bool saw_very_bad = false;
  bool saw_bad_before = false;  // a bad point before the first very bad one
                                // (before cycle end when none occurred)
  std::int64_t first_very_bad_index = -1;  // 1-based attempt index, -1 if none

  std::int64_t displacement_gap() const { return high.displacement[0] - low.displacement[0]; }
};

struct BiasPairResult {
  double lambda = 0.0, epsilon = 0.0, mu = 0.0;
  int d = 1;
  std::vector<BiasPairCycle> cycles;
  std::uint64_t infected_size_mismatches = 0;  // must stay 0
};

// Full two-bias pair: shared attempt clock at rate kappa, joint direction
// case per classify_point, matched infected-set removals so both walkers
// regenerate together, shared environment until the first very bad point,
// independent evolution afterwards.
BiasPairResult coupled_bias_pair_cycles(double lambda, double epsilon, double mu,
                                        const ConductanceLaw& law, int d,
                                        std::uint64_t n_cycles, RngStream& rng,
                                        const CycleCaps& caps = {});

struct GapEstimate {
  double gap = 0.0;  // |v_1dim - v_ddim|
  double ci_low = 0.0, ci_high = 0.0;
  SpeedEstimate speed_1d;
  SpeedEstimate speed_dd;
};

// Independent estimates of the 1-dimensional proxy speed (refresh rate
// Z mu + m(2d-2)) and the d-dimensional speed (refresh rate Z mu); their
// absolute difference with a combined interval.
GapEstimate dim_reduction_gap(double lambda, double mu, const ConductanceLaw& law, int d,
                              std::uint64_t n_cycles, std::uint64_t seed, unsigned workers,
                              const CycleCaps& caps = {});

}  // namespace dynwalk
