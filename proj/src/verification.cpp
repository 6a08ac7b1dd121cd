#include "dynwalk/verification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "dynwalk/errors.hpp"
#include "dynwalk/stats.hpp"

namespace dynwalk {

double BiasMeasure::evaluate(std::int64_t x_dot_e1) const {
  return std::exp(2.0 * lambda * static_cast<double>(x_dot_e1));
}

namespace {

struct SiteHash {
  std::size_t operator()(const Site& s) const {
    std::uint64_t h = 0x12345678ULL;
    for (int i = 0; i < kMaxDim; ++i)
      h = detail::splitmix64(h ^ static_cast<std::uint64_t>(s.c[i]));
    return static_cast<std::size_t>(h);
  }
};

Site negate(const Site& s) {
  Site n;
  for (int i = 0; i < kMaxDim; ++i) n.c[i] = -s.c[i];
  return n;
}

bool lex_positive(const Site& s) {
  for (int i = 0; i < kMaxDim; ++i) {
    if (s.c[i] > 0) return true;
    if (s.c[i] < 0) return false;
  }
  return false;
}

}  // namespace

DetailedBalanceReport detailed_balance_test(int M, int d, double lambda, double mu,
                                            const ConductanceLaw& law, double t,
                                            std::uint64_t n_samples, RngStream& rng) {
  WalkerParams params;
  params.kind = WalkerKind::vbrw;
  params.lambda = lambda;
  params.mu = mu;
  params.d = d;
  params.law = law;
  params.validate();

  DynEnvironment env(Geometry::torus_geometry(d, M), mu, law);
  std::unordered_map<Site, std::uint64_t, SiteHash> histogram;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    env.clear();
    Trajectory traj = vbrw_run(params, env, t, rng);
    ++histogram[traj.final_position];
  }

  std::vector<DisplacementPairStat> pairs;
  for (const auto& [site, count] : histogram) {
    if (!lex_positive(site)) continue;
    if (std::llabs(site.c[0]) > 3) continue;
    DisplacementPairStat ps;
    for (int i = 0; i < kMaxDim; ++i) ps.x[i] = site.c[i];
    ps.count_pos = count;
    auto itn = histogram.find(negate(site));
    ps.count_neg = itn == histogram.end() ? 0 : itn->second;
    ps.target_ratio = std::exp(2.0 * lambda * static_cast<double>(site.c[0]));
    pairs.push_back(ps);
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    for (int i = 0; i < kMaxDim; ++i)
      if (a.x[i] != b.x[i]) return a.x[i] < b.x[i];
    return false;
  });

  // Conditional two-proportion test: given k = n+ + n-, under the null n+
  // is Binomial(k, rho/(1+rho)). Pairs whose expected cell counts fall
  // below 20 are reported but not tested (power warning).
  std::size_t tested = 0, skipped = 0;
  for (auto& ps : pairs) {
    double k = static_cast<double>(ps.count_pos + ps.count_neg);
    double pi = ps.target_ratio / (1.0 + ps.target_ratio);
    if (k * pi < 20.0 || k * (1.0 - pi) < 20.0) {
      ++skipped;
      continue;
    }
    ps.tested = true;
    ++tested;
    ps.z = (static_cast<double>(ps.count_pos) - k * pi) / std::sqrt(k * pi * (1.0 - pi));
    if (ps.count_neg > 0) {
      ps.ratio = static_cast<double>(ps.count_pos) / static_cast<double>(ps.count_neg);
      if (ps.count_pos > 0) {
        double half = stats::two_sided_z(0.99) *
                      std::sqrt(1.0 / static_cast<double>(ps.count_pos) +
                                1.0 / static_cast<double>(ps.count_neg));
        ps.ratio_ci_low = ps.ratio * std::exp(-half);
        ps.ratio_ci_high = ps.ratio * std::exp(half);
      }
    }
  }

  DetailedBalanceReport out;
  out.pairs = std::move(pairs);
  out.report.name = "detailed_balance";
  out.report.n_samples = n_samples;
  double crit = tested > 0
                    ? stats::normal_quantile(1.0 - 0.01 / (2.0 * static_cast<double>(tested)))
                    : 0.0;
  double max_z = 0.0;
  for (const auto& ps : out.pairs)
    if (ps.tested) max_z = std::max(max_z, std::fabs(ps.z));
  out.report.statistic = max_z;
  out.report.threshold = crit;
  out.report.pass = tested > 0 && max_z <= crit;
  std::ostringstream notes;
  notes << tested << " displacement pairs tested at Bonferroni-corrected 99%";
  if (skipped > 0) notes << "; " << skipped << " pairs skipped for low expected counts";
  if (tested == 0) notes << "; no pair had enough power";
  out.report.notes = notes.str();
  return out;
}

double cbrw_path_likelihood_ratio(const std::vector<Site>& path,
                                  const std::vector<SiteView>& views, double lambda) {
  if (path.size() < 2 || views.size() != path.size() - 1)
    throw AssumptionViolationError("likelihood ratio: need n>=1 steps and one view per step");
  double log_ratio = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    int moved_axes = 0;
    for (int i = 0; i < kMaxDim; ++i) {
      std::int64_t step = path[k].c[i] - path[k - 1].c[i];
      if (step == 0) continue;
      if (std::llabs(step) != 1)
        throw AssumptionViolationError("likelihood ratio: path is not nearest-neighbor");
      ++moved_axes;
    }
    if (moved_axes != 1)
      throw AssumptionViolationError("likelihood ratio: path is not nearest-neighbor");
    const SiteView& v = views[k - 1];
    for (int a = 1; a <= v.d; ++a)
      for (int s = 0; s < 2; ++s)
        if (!(v.value[a - 1][s] > 0.0))
          throw AssumptionViolationError("likelihood ratio: zero conductance in a view");
    log_ratio += std::log(total_jump_rate(v, -lambda)) - std::log(total_jump_rate(v, lambda));
  }
  double dx = static_cast<double>(path.back().c[0] - path.front().c[0]);
  return std::exp(2.0 * lambda * dx + log_ratio);
}

TestReport cbrw_symmetry_test(std::uint64_t n_steps, double lambda, double mu,
                              const ConductanceLaw& law, std::uint64_t n_samples,
                              RngStream& rng) {
  if (n_samples < 30)
    throw InsufficientSamplesError("cbrw_symmetry_test: need at least 30 samples");
  WalkerParams params;
  params.kind = WalkerKind::cbrw;
  params.mu = mu;
  params.d = 1;
  params.law = law;

  auto collect = [&](double bias, RngStream stream) {
    WalkerParams p = params;
    p.lambda = bias;
    p.validate();
    DynEnvironment env(Geometry::lattice(1), mu, law);
    std::vector<double> xs;
    xs.reserve(n_samples);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
      env.clear();
      Trajectory traj = cbrw_run_jumps(p, env, n_steps, stream);
      xs.push_back(static_cast<double>(traj.displacement_e1()));
    }
    return stats::moments(xs);
  };
  stats::Moments plus = collect(lambda, rng.split(1));
  stats::Moments minus = collect(-lambda, rng.split(2));

  TestReport rep;
  rep.name = "cbrw_symmetry";
  rep.n_samples = 2 * n_samples;
  double combined_se = std::hypot(plus.se(), minus.se());
  rep.statistic = std::fabs(plus.mean + minus.mean);
  rep.threshold = 4.0 * combined_se;
  rep.pass = rep.statistic <= rep.threshold;
  std::ostringstream notes;
  notes << "mean(+lambda)=" << plus.mean << " mean(-lambda)=" << minus.mean
        << " combined_se=" << combined_se;
  rep.notes = notes.str();
  return rep;
}

TestReport speed_positivity_test(WalkerKind kind, double lambda, double mu,
                                 const ConductanceLaw& law, std::uint64_t n_cycles,
                                 std::uint64_t seed, unsigned workers, int d) {
  TestReport rep;
  rep.name = std::string("speed_positivity_") + walker_kind_name(kind);
  if (lambda == 0.0) {
    rep.pass = true;
    rep.notes = "not applicable: zero bias has zero speed";
    return rep;
  }
  if (lambda < 0.0)
    throw AssumptionViolationError("speed_positivity_test: lambda must be positive");
  WalkerParams params;
  params.kind = kind;
  params.lambda = lambda;
  params.mu = mu;
  params.d = d;
  params.law = law;
  CycleBatch batch = run_cycles_parallel(params, n_cycles, seed, workers);
  SpeedEstimate est = estimate_speed(batch.records);
  rep.statistic = est.ci_low;
  rep.threshold = 0.0;
  rep.pass = est.ci_low > 0.0;
  rep.n_samples = n_cycles;
  std::ostringstream notes;
  notes << "point=" << est.point << " ci=[" << est.ci_low << "," << est.ci_high << "]";
  rep.notes = notes.str();
  return rep;
}

namespace {

int law_cell(const ConductanceLaw& law, double v) {
  if (law.is_discrete()) {
    int best = 0;
    double dist = 1e300;
    for (std::size_t i = 0; i < law.atoms().size(); ++i) {
      double d = std::fabs(v - law.atoms()[i].value);
      if (d < dist) {
        dist = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }
  double f = (v - law.lo()) / (law.hi() - law.lo());
  int cell = static_cast<int>(f * 8.0);
  return std::clamp(cell, 0, 7);
}

int law_cell_count(const ConductanceLaw& law) {
  return law.is_discrete() ? static_cast<int>(law.atoms().size()) : 8;
}

double law_cell_prob(const ConductanceLaw& law, int cell) {
  return law.is_discrete() ? law.atoms()[cell].prob : 1.0 / 8.0;
}

}  // namespace

TestReport stationarity_test(double mu, const ConductanceLaw& law, double t,
                             std::uint64_t n_replicas, RngStream& rng) {
  const int cells = law_cell_count(law);
  DynEnvironment env(Geometry::lattice(1), mu, law);
  Edge edges[3];
  for (int j = 0; j < 3; ++j) {
    edges[j] = Edge{{}, 1};
    edges[j].site.c[0] = 5 * j;
  }
  std::vector<double> marginal(cells, 0.0);
  std::unordered_map<int, std::uint64_t> joint;
  for (std::uint64_t i = 0; i < n_replicas; ++i) {
    env.clear();
    int idx[3];
    for (int j = 0; j < 3; ++j) {
      env.conductance_at(edges[j], 0.0, rng);  // realize at time 0
      double v = env.conductance_at(edges[j], t, rng);
      idx[j] = law_cell(law, v);
      marginal[idx[j]] += 1.0;
    }
    joint[(idx[0] * cells + idx[1]) * cells + idx[2]] += 1;
  }

  std::vector<double> expected(cells);
  for (int cidx = 0; cidx < cells; ++cidx)
    expected[cidx] = law_cell_prob(law, cidx) * 3.0 * static_cast<double>(n_replicas);
  stats::Chi2Result marg = stats::chi2_gof(marginal, expected);

  double min_p = marg.p_value;
  int tests = 1;
  // Joint independence across the three edges, only when the contingency
  // table stays small enough for decent expected counts.
  if (cells <= 4) {
    std::vector<double> obs, exp;
    for (int a = 0; a < cells; ++a)
      for (int b = 0; b < cells; ++b)
        for (int cidx = 0; cidx < cells; ++cidx) {
          auto it = joint.find((a * cells + b) * cells + cidx);
          obs.push_back(it == joint.end() ? 0.0 : static_cast<double>(it->second));
          exp.push_back(law_cell_prob(law, a) * law_cell_prob(law, b) *
                        law_cell_prob(law, cidx) * static_cast<double>(n_replicas));
        }
    stats::Chi2Result jnt = stats::chi2_gof(obs, exp);
    min_p = std::min(min_p, jnt.p_value);
    tests = 2;
  }

  TestReport rep;
  rep.name = "environment_stationarity";
  rep.n_samples = n_replicas;
  rep.statistic = min_p;
  rep.threshold = 0.01 / tests;
  rep.pass = min_p > rep.threshold;
  std::ostringstream notes;
  notes << "marginal chi2=" << marg.statistic << " (df=" << marg.df << ", p=" << marg.p_value
        << "); " << tests << " tests at Bonferroni 99%";
  rep.notes = notes.str();
  return rep;
}

namespace {

struct FrozenLine {
  // d=1 conductances w(x, x+1) for x in [-4, 3]; index by x + 4.
  std::array<double, 8> w{};

  double at(std::int64_t x) const { return w[static_cast<std::size_t>(x + 4)]; }

  SiteView view_at(std::int64_t x) const {
    SiteView v;
    v.d = 1;
    v.value[0][0] = at(x);
    v.value[0][1] = at(x - 1);
    return v;
  }

  double w_lambda(std::int64_t x, double lambda) const {
    return std::exp(lambda) * at(x) + std::exp(-lambda) * at(x - 1);
  }

  // Conditional path probability of the embedded chain under bias lambda.
  double path_prob(const std::vector<int>& steps, double lambda) const {
    double p = 1.0;
    std::int64_t x = 0;
    for (int s : steps) {
      double edge = s > 0 ? at(x) : at(x - 1);
      p *= edge * std::exp(lambda * s) / w_lambda(x, lambda);
      x += s;
    }
    return p;
  }
};

FrozenLine draw_frozen_line(const ConductanceLaw& law, RngStream& rng) {
  if (!law.validate().zero_free)
    throw AssumptionViolationError("frozen path check: law must give positive conductances");
  FrozenLine line;
  for (auto& w : line.w) w = law.sample(rng);
  return line;
}

std::vector<Site> steps_to_path(const std::vector<int>& steps) {
  std::vector<Site> path(steps.size() + 1);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    path[i + 1] = path[i];
    path[i + 1].c[0] += steps[i];
  }
  return path;
}

}  // namespace

TestReport cbrw_frozen_path_check(double lambda, const ConductanceLaw& law, RngStream& rng) {
  FrozenLine line = draw_frozen_line(law, rng);
  double max_err = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> steps(3);
    for (int b = 0; b < 3; ++b) steps[b] = (mask >> b) & 1 ? +1 : -1;
    std::vector<Site> path = steps_to_path(steps);
    std::vector<SiteView> views;
    std::int64_t x = 0;
    for (int s : steps) {
      views.push_back(line.view_at(x));
      x += s;
    }
    double direct = line.path_prob(steps, lambda);
    double via_ratio =
        line.path_prob(steps, -lambda) * cbrw_path_likelihood_ratio(path, views, lambda);
    max_err = std::max(max_err, std::fabs(direct - via_ratio));
  }
  TestReport rep;
  rep.name = "cbrw_likelihood_ratio_oracle";
  rep.statistic = max_err;
  rep.threshold = 1e-12;
  rep.pass = max_err <= rep.threshold;
  rep.n_samples = 8;
  rep.notes = "all length-3 paths on one frozen d=1 environment";
  return rep;
}

TestReport cbrw_reweighted_path_test(double lambda, const ConductanceLaw& law,
                                     std::uint64_t n_samples, RngStream& rng) {
  if (n_samples < 30)
    throw InsufficientSamplesError("cbrw_reweighted_path_test: need at least 30 samples");
  FrozenLine line = draw_frozen_line(law, rng);
  const std::vector<int> target_steps = {+1, +1, +1};
  std::vector<Site> target_path = steps_to_path(target_steps);
  std::vector<SiteView> views = {line.view_at(0), line.view_at(1), line.view_at(2)};
  double exact = line.path_prob(target_steps, lambda);
  double lr = cbrw_path_likelihood_ratio(target_path, views, lambda);

  // Sample the embedded chain under -lambda on the same frozen field and
  // average the ratio-weighted indicator of the target path.
  std::vector<double> weights(n_samples, 0.0);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    std::int64_t x = 0;
    bool match = true;
    for (int k = 0; k < 3; ++k) {
      double p_right = std::exp(-lambda) * line.at(x) / line.w_lambda(x, -lambda);
      int step = rng.uniform() < p_right ? +1 : -1;
      if (step != target_steps[static_cast<std::size_t>(k)]) {
        match = false;
        // keep consuming the remaining steps so the draw count is path-free
      }
      x += step;
    }
    if (match) weights[i] = lr;
  }
  stats::Moments m = stats::moments(weights);

  TestReport rep;
  rep.name = "cbrw_likelihood_ratio_reweighting";
  rep.n_samples = n_samples;
  rep.statistic = std::fabs(m.mean - exact);
  rep.threshold = 4.0 * m.se();
  rep.pass = rep.statistic <= rep.threshold;
  std::ostringstream notes;
  notes << "exact=" << exact << " reweighted=" << m.mean << " se=" << m.se();
  rep.notes = notes.str();
  return rep;
}

}  // namespace dynwalk
