#pragma once

// Infected-set regeneration: every jump attempt infects the edge(s) it
// touches (one copy per attempt for the attempt-driven walks, one copy of
// each incident edge per jump for the constant speed walk); copies die at
// rate mu per copy and the death of an edge's first copy refreshes that edge
// in the environment. The times at which the infected set empties cut the
// joint walk/environment process into i.i.d. cycles, which drive every
// estimator in this project.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dynwalk/lattice.hpp"
#include "dynwalk/stats.hpp"
#include "dynwalk/walkers.hpp"

namespace dynwalk {

// Multiset of edge copies. A new copy always takes the smallest free copy
// index of its edge, so per edge only the copy count and the presence of
// copy 1 are observable; removal picks a uniform copy resolved against the
// lexicographic edge order.
class InfectedSet {
 public:
  struct Removal {
    Edge edge;
    bool was_first_copy;
  };

  // Returns true iff the inserted copy is the edge's first copy.
  bool add(const Edge& e);
  Removal remove_uniform(RngStream& rng);

  std::uint64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }
  std::size_t distinct_edges() const { return copies_.size(); }
  void clear();

 private:
  struct CopyState {
    std::uint32_t count = 0;
    bool has_first = false;
  };

  std::map<Edge, CopyState, EdgeLess> copies_;
  std::uint64_t total_ = 0;
};

struct RegenCycleRecord {
  double tau = 0.0;
  std::array<std::int64_t, kMaxDim> displacement{};
  std::uint64_t attempts = 0;        // N: jump attempts in the cycle
  std::uint64_t right = 0, left = 0; // successful +-e_1 jumps (R, L)
  std::uint64_t right_attempts = 0, left_attempts = 0;  // attempted (Ra, La)

  std::int64_t displacement_e1() const { return displacement[0]; }
};

struct CycleCaps {
  std::uint64_t max_infected = 1000000;
  double max_tau = 1e9;
};

struct CycleBatch {
  WalkerParams params;
  std::vector<RegenCycleRecord> records;
};

// Exact simulation of the joint (walker, environment, infected set)
// dynamics on Z^d; cycles are generated back to back and are i.i.d.
CycleBatch run_cycles(const WalkerParams& params, std::uint64_t n, RngStream& rng,
                      const CycleCaps& caps = {});

// Replica fan-out: the n cycles are split over `replicas` independent
// streams (stream ids stream_base + r) and merged in replica order, so the
// result depends only on (params, n, seed, replicas), never on how many
// threads execute the replica jobs. threads = 0 picks the hardware width.
CycleBatch run_cycles_parallel(const WalkerParams& params, std::uint64_t n,
                               std::uint64_t seed, unsigned replicas,
                               const CycleCaps& caps = {}, std::uint64_t stream_base = 0,
                               unsigned threads = 0);

struct SpeedEstimate {
  double point = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // operative interval at the set level
  double se = 0.0;                     // delta-method standard error
  std::uint64_t n_cycles = 0;

  double mean_tau = 0.0, tau_ci_low = 0.0, tau_ci_high = 0.0;
  double mean_attempts = 0.0, attempts_ci_low = 0.0, attempts_ci_high = 0.0;

  // Both interval constructions are always reported; the batch interval
  // becomes operative when the linearized residuals are strongly skewed.
  double delta_ci_low = 0.0, delta_ci_high = 0.0;
  double batch_ci_low = 0.0, batch_ci_high = 0.0;
  bool used_batch = false;
};

// Ratio estimator sum(dx1)/sum(tau) with a delta-method interval on the
// bivariate cycle mean; needs at least 30 cycles.
SpeedEstimate estimate_speed(std::span<const RegenCycleRecord> records,
                             double confidence = 0.99);

// Importance reweighting of cycles generated at lambda = 0 (normalized walk
// only): E^lambda[X_tau . e_1] = E^0[(R-L) e^{lambda(Ra-La)} (2d/Z_lambda)^N].
stats::Moments reweighted_displacement_moments(const CycleBatch& batch_at_zero,
                                               double lambda_target);
double reweighted_displacement(const CycleBatch& batch_at_zero, double lambda_target);

// Plain mean/CI of a per-cycle scalar, with a projection for convenience.
stats::Moments cycle_moments(std::span<const RegenCycleRecord> records,
                             double (*projection)(const RegenCycleRecord&));

}  // namespace dynwalk
