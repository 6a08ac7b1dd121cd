#include "dynwalk/regeneration.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "dynwalk/errors.hpp"

namespace dynwalk {

bool InfectedSet::add(const Edge& e) {
  CopyState& cs = copies_[e];
  bool first = !cs.has_first;
  cs.has_first = true;
  ++cs.count;
  ++total_;
  return first;
}

InfectedSet::Removal InfectedSet::remove_uniform(RngStream& rng) {
  if (total_ == 0) throw AssumptionViolationError("infected set: removal from empty set");
  std::uint64_t idx = rng.uniform_below(total_);
  for (auto it = copies_.begin(); it != copies_.end(); ++it) {
    CopyState& cs = it->second;
    if (idx >= cs.count) {
      idx -= cs.count;
      continue;
    }
    // Copies of one edge are ordered by copy index; when copy 1 is present
    // it is the smallest, i.e. offset 0.
    bool first = cs.has_first && idx == 0;
    Removal rem{it->first, first};
    if (first) cs.has_first = false;
    --cs.count;
    --total_;
    if (cs.count == 0) copies_.erase(it);
    return rem;
  }
  throw AssumptionViolationError("infected set: inconsistent totals");
}

void InfectedSet::clear() {
  copies_.clear();
  total_ = 0;
}

namespace {

[[noreturn]] void overflow(const WalkerParams& p, const char* what) {
  std::ostringstream os;
  os << "regeneration cycle overflow (" << what << ") for kind=" << walker_kind_name(p.kind)
     << " lambda=" << p.lambda << " mu=" << p.mu << " d=" << p.d
     << "; mu is likely too small for the attempt rate";
  throw CycleOverflowError(os.str());
}

struct CycleState {
  Site pos{};
  double t = 0.0;
  RegenCycleRecord rec;
};

void apply_attempt(CycleState& st, const Direction& dir, bool success) {
  ++st.rec.attempts;
  if (dir.axis == 1) {
    if (dir.sign > 0) {
      ++st.rec.right_attempts;
      if (success) ++st.rec.right;
    } else {
      ++st.rec.left_attempts;
      if (success) ++st.rec.left;
    }
  }
  if (success) st.pos = neighbor(st.pos, dir.axis, dir.sign);
}

// One attempt event for the attempt-driven kinds; the attempted edge joins
// the infected set whether or not the jump succeeds.
void attempt_event(const WalkerParams& params, CycleState& st, DynEnvironment& env,
                   InfectedSet& infected, RngStream& rng) {
  Direction dir{1, +1};
  if (params.kind != WalkerKind::totally_asymmetric) {
    double u = rng.uniform(0.0, z_lambda(params.lambda, params.d));
    dir = attempt_direction(u, params.lambda, params.d);
  }
  Edge e = incident_edge(st.pos, dir.axis, dir.sign);
  double w = env.conductance_at(e, st.t, rng);
  if (infected.add(e)) env.hold(e, st.t, rng);
  double v = rng.uniform(0.0, params.law.kappa());
  apply_attempt(st, dir, v <= w);
}

// One jump event for the constant speed walk: all incident edges are read
// and infected, then the walker moves proportionally to the tilted values.
void cbrw_event(const WalkerParams& params, CycleState& st, DynEnvironment& env,
                InfectedSet& infected, RngStream& rng) {
  SiteView view;
  view.d = params.d;
  for (int a = 1; a <= params.d; ++a) {
    view.value[a - 1][0] = env.conductance_at(incident_edge(st.pos, a, +1), st.t, rng);
    view.value[a - 1][1] = env.conductance_at(incident_edge(st.pos, a, -1), st.t, rng);
  }
  for (int a = 1; a <= params.d; ++a) {
    for (int s : {+1, -1}) {
      Edge e = incident_edge(st.pos, a, s);
      if (infected.add(e)) env.hold(e, st.t, rng);
    }
  }
  Direction dir = choose_neighbor(view, params.lambda, rng);
  apply_attempt(st, dir, true);
}

RegenCycleRecord one_cycle(const WalkerParams& params, DynEnvironment& env,
                           InfectedSet& infected, RngStream& rng, const CycleCaps& caps) {
  CycleState st;
  env.clear();
  infected.clear();
  const double attempt_rate = params.attempt_rate();
  for (;;) {
    bool do_attempt;
    double dt;
    if (infected.empty()) {
      do_attempt = true;
      dt = rng.exponential(attempt_rate);
    } else {
      // Competing exponential clocks, re-drawn whenever |I| changes.
      double dta = rng.exponential(attempt_rate);
      double dtr = rng.exponential(params.mu * static_cast<double>(infected.total()));
      do_attempt = dta <= dtr;
      dt = do_attempt ? dta : dtr;
    }
    st.t += dt;
    if (st.t > caps.max_tau) overflow(params, "tau cap");
    if (do_attempt) {
      if (params.kind == WalkerKind::cbrw)
        cbrw_event(params, st, env, infected, rng);
      else
        attempt_event(params, st, env, infected, rng);
      if (infected.total() > caps.max_infected) overflow(params, "infected-set cap");
    } else {
      InfectedSet::Removal rem = infected.remove_uniform(rng);
      if (rem.was_first_copy) env.force_refresh(rem.edge, st.t, rng);
      if (infected.empty()) break;
    }
  }
  st.rec.tau = st.t;
  for (int i = 0; i < kMaxDim; ++i) st.rec.displacement[i] = st.pos.c[i];
  return st.rec;
}

}  // namespace

CycleBatch run_cycles(const WalkerParams& params, std::uint64_t n, RngStream& rng,
                      const CycleCaps& caps) {
  params.validate();
  if (n < 1) throw AssumptionViolationError("run_cycles: need at least one cycle");
  CycleBatch batch{params, {}};
  batch.records.reserve(n);
  DynEnvironment env(Geometry::lattice(params.d), params.mu, params.law,
                     EnvMode::event_driven);
  InfectedSet infected;
  for (std::uint64_t i = 0; i < n; ++i)
    batch.records.push_back(one_cycle(params, env, infected, rng, caps));
  return batch;
}

CycleBatch run_cycles_parallel(const WalkerParams& params, std::uint64_t n,
                               std::uint64_t seed, unsigned replicas, const CycleCaps& caps,
                               std::uint64_t stream_base, unsigned threads) {
  params.validate();
  if (replicas == 0) replicas = 1;
  if (replicas > n) replicas = static_cast<unsigned>(std::max<std::uint64_t>(n, 1));
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  threads = std::min(threads, replicas);
  if (replicas == 1) {
    RngStream rng(seed, stream_base);
    return run_cycles(params, n, rng, caps);
  }
  std::vector<CycleBatch> parts(replicas);
  std::vector<std::exception_ptr> errors(replicas);
  std::atomic<unsigned> next{0};
  std::uint64_t per = n / replicas, extra = n % replicas;
  auto worker = [&] {
    for (;;) {
      unsigned r = next.fetch_add(1);
      if (r >= replicas) return;
      try {
        std::uint64_t quota = per + (r < extra ? 1 : 0);
        RngStream rng(seed, stream_base + r);
        parts[r] = run_cycles(params, quota, rng, caps);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  CycleBatch merged{params, {}};
  merged.records.reserve(n);
  for (auto& part : parts)
    merged.records.insert(merged.records.end(), part.records.begin(), part.records.end());
  return merged;
}

SpeedEstimate estimate_speed(std::span<const RegenCycleRecord> records, double confidence) {
  if (records.size() < 30)
    throw InsufficientSamplesError("estimate_speed: need at least 30 cycles");
  SpeedEstimate est;
  est.n_cycles = records.size();
  const double n = static_cast<double>(records.size());

  double sum_dx = 0.0, sum_tau = 0.0;
  for (const auto& r : records) {
    sum_dx += static_cast<double>(r.displacement_e1());
    sum_tau += r.tau;
  }
  est.point = sum_dx / sum_tau;
  double tau_bar = sum_tau / n;

  // Delta method on the bivariate cycle mean: var of the linearized
  // residual dx - v * tau, scaled by the mean cycle length.
  std::vector<double> resid(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    resid[i] = static_cast<double>(records[i].displacement_e1()) - est.point * records[i].tau;
  stats::Moments rm = stats::moments(resid);
  est.se = rm.sd() / (tau_bar * std::sqrt(n));
  double z = stats::two_sided_z(confidence);
  est.delta_ci_low = est.point - z * est.se;
  est.delta_ci_high = est.point + z * est.se;

  // Batching fallback: 20 contiguous batches, Student-t interval.
  const int B = 20;
  if (records.size() >= static_cast<std::size_t>(2 * B)) {
    std::vector<double> batch_ratio(B);
    std::size_t per = records.size() / B;
    for (int b = 0; b < B; ++b) {
      double dx = 0.0, tau = 0.0;
      std::size_t end = (b == B - 1) ? records.size() : (b + 1) * per;
      for (std::size_t i = b * per; i < end; ++i) {
        dx += static_cast<double>(records[i].displacement_e1());
        tau += records[i].tau;
      }
      batch_ratio[b] = dx / tau;
    }
    stats::Moments bm = stats::moments(batch_ratio);
    double t = stats::two_sided_t(confidence, B - 1);
    est.batch_ci_low = bm.mean - t * bm.se();
    est.batch_ci_high = bm.mean + t * bm.se();
    est.used_batch = std::fabs(stats::skewness(resid)) > 4.0;
  } else {
    est.batch_ci_low = est.delta_ci_low;
    est.batch_ci_high = est.delta_ci_high;
  }

  est.ci_low = est.used_batch ? est.batch_ci_low : est.delta_ci_low;
  est.ci_high = est.used_batch ? est.batch_ci_high : est.delta_ci_high;
  est.ci_low = std::min(est.ci_low, est.point);
  est.ci_high = std::max(est.ci_high, est.point);

  std::vector<double> taus(records.size()), ns(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    taus[i] = records[i].tau;
    ns[i] = static_cast<double>(records[i].attempts);
  }
  stats::Moments tm = stats::moments(taus);
  stats::Interval tci = stats::mean_ci(tm, confidence);
  est.mean_tau = tm.mean;
  est.tau_ci_low = tci.lo;
  est.tau_ci_high = tci.hi;
  stats::Moments nm = stats::moments(ns);
  stats::Interval nci = stats::mean_ci(nm, confidence);
  est.mean_attempts = nm.mean;
  est.attempts_ci_low = nci.lo;
  est.attempts_ci_high = nci.hi;
  return est;
}

stats::Moments reweighted_displacement_moments(const CycleBatch& batch_at_zero,
                                               double lambda_target) {
  if (batch_at_zero.params.kind != WalkerKind::nvbrw || batch_at_zero.params.lambda != 0.0)
    throw AssumptionViolationError(
        "reweighted_displacement: records must come from the normalized walk at lambda = 0");
  const int d = batch_at_zero.params.d;
  const double log_ratio = std::log(2.0 * d) - std::log(z_lambda(lambda_target, d));
  std::vector<double> ws;
  ws.reserve(batch_at_zero.records.size());
  for (const auto& r : batch_at_zero.records) {
    double signed_attempts =
        static_cast<double>(r.right_attempts) - static_cast<double>(r.left_attempts);
    double net = static_cast<double>(r.right) - static_cast<double>(r.left);
    double logw = lambda_target * signed_attempts + static_cast<double>(r.attempts) * log_ratio;
    ws.push_back(net * std::exp(logw));
  }
  return stats::moments(ws);
}

double reweighted_displacement(const CycleBatch& batch_at_zero, double lambda_target) {
  return reweighted_displacement_moments(batch_at_zero, lambda_target).mean;
}

stats::Moments cycle_moments(std::span<const RegenCycleRecord> records,
                             double (*projection)(const RegenCycleRecord&)) {
  std::vector<double> xs;
  xs.reserve(records.size());
  for (const auto& r : records) xs.push_back(projection(r));
  return stats::moments(xs);
}

}  // namespace dynwalk
