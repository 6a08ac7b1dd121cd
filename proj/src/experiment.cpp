#include "dynwalk/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dynwalk/birth_death.hpp"
#include "dynwalk/closed_forms.hpp"
#include "dynwalk/couplings.hpp"
#include "dynwalk/errors.hpp"
#include "dynwalk/verification.hpp"

namespace dynwalk {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConstructionError(std::string("could not parse number '") + s + "' in " + what);
  }
}

}  // namespace

ConductanceLaw parse_law_string(const std::string& text) {
  std::string body = text;
  double kappa = -1.0;
  if (auto at = body.find('@'); at != std::string::npos) {
    kappa = to_double(body.substr(at + 1), "law kappa");
    body = body.substr(0, at);
  }
  std::vector<std::string> parts = split(body, ':');
  const std::string& kind = parts[0];
  auto kappa_or = [&](double support_max) { return kappa > 0.0 ? kappa : support_max; };

  if (kind == "point") {
    if (parts.size() != 2) throw ConstructionError("law: expected point:VALUE");
    double v = to_double(parts[1], "point law");
    return ConductanceLaw::point_mass(v, kappa_or(v));
  }
  if (kind == "two_point") {
    if (parts.size() != 3) throw ConstructionError("law: expected two_point:A,B:P");
    std::vector<std::string> ab = split(parts[1], ',');
    if (ab.size() != 2) throw ConstructionError("law: expected two values in two_point:A,B:P");
    double a = to_double(ab[0], "two_point law");
    double b = to_double(ab[1], "two_point law");
    double p = to_double(parts[2], "two_point law");
    return ConductanceLaw::two_point(a, b, p, kappa_or(std::max(a, b)));
  }
  if (kind == "uniform") {
    if (parts.size() != 2) throw ConstructionError("law: expected uniform:LO,HI");
    std::vector<std::string> lh = split(parts[1], ',');
    if (lh.size() != 2) throw ConstructionError("law: expected uniform:LO,HI");
    double lo = to_double(lh[0], "uniform law");
    double hi = to_double(lh[1], "uniform law");
    return ConductanceLaw::uniform_interval(lo, hi, kappa_or(hi));
  }
  if (kind == "discrete") {
    if (parts.size() != 3) throw ConstructionError("law: expected discrete:V1,V2,..:P1,P2,..");
    std::vector<std::string> vs = split(parts[1], ',');
    std::vector<std::string> ps = split(parts[2], ',');
    if (vs.size() != ps.size() || vs.empty())
      throw ConstructionError("law: discrete needs matching value and probability lists");
    std::vector<ConductanceLaw::Atom> atoms;
    double maxv = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      double v = to_double(vs[i], "discrete law");
      maxv = std::max(maxv, v);
      atoms.push_back({v, to_double(ps[i], "discrete law")});
    }
    return ConductanceLaw::finite_discrete(atoms, kappa_or(maxv));
  }
  throw ConstructionError("law: unknown kind '" + kind +
                          "' (expected point, two_point, uniform, discrete)");
}

ConductanceLaw parse_law_json(const OrderedJson& spec) {
  if (spec.is_string()) return parse_law_string(spec.get<std::string>());
  if (!spec.is_object()) throw ConstructionError("law: expected an object or a compact string");
  std::string kind = spec.value("kind", "");
  double kappa = spec.value("kappa", -1.0);
  auto kappa_or = [&](double support_max) { return kappa > 0.0 ? kappa : support_max; };
  if (kind == "point")
    return ConductanceLaw::point_mass(spec.at("value").get<double>(),
                                      kappa_or(spec.at("value").get<double>()));
  if (kind == "two_point") {
    double a = spec.at("a").get<double>();
    double b = spec.at("b").get<double>();
    return ConductanceLaw::two_point(a, b, spec.at("p").get<double>(),
                                     kappa_or(std::max(a, b)));
  }
  if (kind == "uniform") {
    double hi = spec.at("hi").get<double>();
    return ConductanceLaw::uniform_interval(spec.at("lo").get<double>(), hi, kappa_or(hi));
  }
  if (kind == "discrete") {
    std::vector<ConductanceLaw::Atom> atoms;
    double maxv = 0.0;
    for (const auto& a : spec.at("atoms")) {
      atoms.push_back({a.at("value").get<double>(), a.at("prob").get<double>()});
      maxv = std::max(maxv, atoms.back().value);
    }
    return ConductanceLaw::finite_discrete(atoms, kappa_or(maxv));
  }
  throw ConstructionError("law: unknown kind '" + kind + "'");
}

OrderedJson law_echo(const ConductanceLaw& law) {
  OrderedJson j;
  if (law.is_discrete()) {
    j["kind"] = law.atoms().size() == 2 ? "two_point" : "discrete";
    OrderedJson atoms = OrderedJson::array();
    for (const auto& a : law.atoms()) atoms.push_back({{"value", a.value}, {"prob", a.prob}});
    j["atoms"] = atoms;
  } else {
    j["kind"] = "uniform";
    j["lo"] = law.lo();
    j["hi"] = law.hi();
  }
  j["kappa"] = law.kappa();
  return j;
}

WalkerKind ExperimentConfig::walker_kind() const {
  if (kind == "vbrw") return WalkerKind::vbrw;
  if (kind == "nvbrw") return WalkerKind::nvbrw;
  if (kind == "cbrw") return WalkerKind::cbrw;
  if (kind == "tasym") return WalkerKind::totally_asymmetric;
  throw ConstructionError("config: unknown walker kind '" + kind +
                          "' (expected vbrw, nvbrw, cbrw, tasym)");
}

WalkerParams ExperimentConfig::walker_params() const {
  WalkerParams p;
  p.kind = walker_kind();
  p.lambda = lambda;
  p.mu = mu;
  p.d = d;
  p.law = law.value_or(ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0));
  return p;
}

void ExperimentConfig::validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(lambda, -20.0, 20.0)) throw ConstructionError("config: lambda outside [-20, 20]");
  for (double l : lambda_grid)
    if (!in(l, -20.0, 20.0)) throw ConstructionError("config: lambda grid outside [-20, 20]");
  if (!(mu > 0.0 && mu <= 1e4)) throw ConstructionError("config: mu outside (0, 1e4]");
  for (double m : mu_grid)
    if (!(m > 0.0 && m <= 1e4)) throw ConstructionError("config: mu grid outside (0, 1e4]");
  if (d < 1 || d > 4) throw ConstructionError("config: d outside [1, 4]");
  if (M < 2 || M > 64) throw ConstructionError("config: M outside [2, 64]");
  if (geometry != "lattice" && geometry != "torus")
    throw ConstructionError("config: geometry must be 'lattice' or 'torus'");
  if (format != "json" && format != "csv")
    throw ConstructionError("config: format must be 'json' or 'csv'");
  if (replicas == 0) throw ConstructionError("config: replicas must be >= 1");
  walker_kind();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.empty()) return out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts = split(text, ':');
    if (parts.size() != 3) throw ConstructionError("grid: expected LO:HI:STEP");
    double lo = to_double(parts[0], "grid");
    double hi = to_double(parts[1], "grid");
    double step = to_double(parts[2], "grid");
    if (!(step > 0.0)) throw ConstructionError("grid: step must be positive");
    for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
    return out;
  }
  for (const std::string& s : split(text, ',')) out.push_back(to_double(s, "grid"));
  return out;
}

void apply_config_json(const OrderedJson& j, ExperimentConfig& cfg) {
  static const std::vector<std::string> known = {
      "experiment", "kind",    "lambda",      "mu",       "d",       "geometry",
      "M",          "law",     "cycles",      "samples",  "steps",   "paths",
      "horizon",    "time",    "lambda_grid", "mu_grid",  "coupling", "epsilon",
      "alpha",      "L",       "p",           "seed",     "replicas", "out",
      "records",    "table",   "format"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConstructionError("config: unknown key '" + key + "'");
    (void)value;
  }
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("experiment", cfg.experiment);
  get("kind", cfg.kind);
  get("lambda", cfg.lambda);
  get("mu", cfg.mu);
  get("d", cfg.d);
  get("geometry", cfg.geometry);
  get("M", cfg.M);
  if (j.contains("law")) cfg.law = parse_law_json(j.at("law"));
  get("cycles", cfg.cycles);
  get("samples", cfg.samples);
  get("steps", cfg.steps);
  get("paths", cfg.paths);
  get("horizon", cfg.horizon);
  get("time", cfg.time_point);
  if (j.contains("lambda_grid")) {
    if (j.at("lambda_grid").is_string())
      cfg.lambda_grid = parse_grid(j.at("lambda_grid").get<std::string>());
    else
      cfg.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  }
  if (j.contains("mu_grid")) {
    if (j.at("mu_grid").is_string())
      cfg.mu_grid = parse_grid(j.at("mu_grid").get<std::string>());
    else
      cfg.mu_grid = j.at("mu_grid").get<std::vector<double>>();
  }
  get("coupling", cfg.coupling);
  get("epsilon", cfg.epsilon);
  get("alpha", cfg.bd_alpha);
  get("L", cfg.bd_L);
  get("p", cfg.rw_p);
  get("seed", cfg.seed);
  get("replicas", cfg.replicas);
  get("out", cfg.out);
  get("records", cfg.records);
  get("table", cfg.table);
  get("format", cfg.format);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConstructionError("config: cannot open '" + path + "'");
  OrderedJson j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConstructionError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  apply_config_json(j, cfg);
  return cfg;
}

namespace {

OrderedJson config_echo(const ExperimentConfig& cfg) {
  OrderedJson j;
  j["experiment"] = cfg.experiment;
  j["kind"] = cfg.kind;
  j["lambda"] = cfg.lambda;
  j["mu"] = cfg.mu;
  j["d"] = cfg.d;
  j["geometry"] = cfg.geometry;
  if (cfg.geometry == "torus") j["M"] = cfg.M;
  j["law"] = law_echo(cfg.walker_params().law);
  j["cycles"] = cfg.cycles;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  return j;
}

OrderedJson estimate_json(const SpeedEstimate& est) {
  OrderedJson j;
  j["point"] = est.point;
  j["ci_low"] = est.ci_low;
  j["ci_high"] = est.ci_high;
  j["se"] = est.se;
  j["n_cycles"] = est.n_cycles;
  j["mean_tau"] = est.mean_tau;
  j["tau_ci"] = {est.tau_ci_low, est.tau_ci_high};
  j["mean_attempts"] = est.mean_attempts;
  j["attempts_ci"] = {est.attempts_ci_low, est.attempts_ci_high};
  j["delta_ci"] = {est.delta_ci_low, est.delta_ci_high};
  j["batch_ci"] = {est.batch_ci_low, est.batch_ci_high};
  j["used_batch"] = est.used_batch;
  return j;
}

OrderedJson report_json(const TestReport& rep, std::uint64_t seed) {
  OrderedJson j;
  j["name"] = rep.name;
  j["statistic"] = rep.statistic;
  j["threshold"] = rep.threshold;
  j["pass"] = rep.pass;
  j["n_samples"] = rep.n_samples;
  j["seed"] = seed;
  j["notes"] = rep.notes;
  return j;
}

void write_records_csv(const std::string& path, const CycleBatch& batch) {
  std::ofstream out(path);
  if (!out) throw ConstructionError("cannot open records file '" + path + "'");
  int d = batch.params.d;
  out << "cycle,tau";
  for (int i = 1; i <= d; ++i) out << ",dx" << i;
  out << ",N,R,L,Ra,La\n";
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    const auto& r = batch.records[i];
    out << i << ',' << r.tau;
    for (int k = 0; k < d; ++k) out << ',' << r.displacement[k];
    out << ',' << r.attempts << ',' << r.right << ',' << r.left << ',' << r.right_attempts
        << ',' << r.left_attempts << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, int d) {
  std::ofstream out(path);
  if (!out) throw ConstructionError("cannot open trajectory file '" + path + "'");
  out << "time";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  out << ",attempt_axis,success\n";
  Site pos{};
  for (const auto& ev : traj.events) {
    if (ev.success) {
      int axis = std::abs(ev.axis);
      pos.c[axis - 1] += ev.axis > 0 ? 1 : -1;
    }
    out << ev.time;
    for (int i = 0; i < d; ++i) out << ',' << pos.c[i];
    out << ',' << static_cast<int>(ev.axis) << ',' << (ev.success ? 1 : 0) << '\n';
  }
}

void write_table_csv(const std::string& path, const std::string& header,
                     const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw ConstructionError("cannot open table file '" + path + "'");
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Closed-form context for a parameter point, matched to the walker kind.
void add_closed_form_columns(OrderedJson& j, const WalkerParams& p) {
  namespace cf = closed_forms;
  switch (p.kind) {
    case WalkerKind::nvbrw: {
      cf::AsymptoticCoefficients co = cf::nvbrw_expansion(p.law, p.mu, p.d);
      j["cf_zeroth"] = co.zeroth;
      j["cf_first"] = co.first;
      j["cf_prediction"] = co.zeroth + co.first * std::exp(-p.lambda);
      cf::RegenMoments rm = cf::nvbrw_regen_moments(p.mu, p.law.kappa());
      j["cf_mean_tau"] = rm.expected_tau;
      j["cf_mean_attempts"] = rm.expected_attempts;
      break;
    }
    case WalkerKind::vbrw: {
      double z = cf::z_lambda(p.lambda, p.d);
      j["cf_prediction"] = cf::vbrw_expansion(p.law, p.mu / z, p.d, p.lambda);
      cf::RegenMoments rm = cf::vbrw_regen_moments(p.lambda, p.mu, p.law.kappa(), p.d);
      j["cf_mean_tau"] = rm.expected_tau;
      j["cf_mean_attempts"] = rm.expected_attempts;
      break;
    }
    case WalkerKind::totally_asymmetric:
      j["cf_prediction"] = cf::v_asym(p.law, p.mu);
      break;
    case WalkerKind::cbrw:
      break;  // no closed-form speed available
  }
}

}  // namespace

OrderedJson run_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  WalkerParams params = cfg.walker_params();
  OrderedJson j;
  j["version"] = kVersionString;
  j["config"] = config_echo(cfg);

  if (cfg.cycles > 0) {
    if (cfg.geometry == "torus")
      throw ConstructionError(
          "simulate: regeneration cycles run on the infinite lattice; use horizon mode "
          "(--horizon) for torus runs");
    CycleBatch batch = run_cycles_parallel(params, cfg.cycles, cfg.seed, cfg.replicas);
    SpeedEstimate est = estimate_speed(batch.records);
    j["speed"] = estimate_json(est);
    add_closed_form_columns(j, params);
    if (!cfg.records.empty()) write_records_csv(cfg.records, batch);
  } else {
    if (!(cfg.horizon > 0.0))
      throw ConstructionError("simulate: need either cycles > 0 or horizon > 0");
    std::uint64_t runs = std::max<std::uint64_t>(cfg.samples, 1);
    std::vector<double> speeds;
    speeds.reserve(runs);
    Trajectory first_traj;
    for (std::uint64_t r = 0; r < runs; ++r) {
      RngStream rng(cfg.seed, r);
      DynEnvironment env(cfg.geometry == "torus" ? Geometry::torus_geometry(cfg.d, cfg.M)
                                                 : Geometry::lattice(cfg.d),
                         cfg.mu, params.law);
      Trajectory traj = run_walk(params, env, cfg.horizon, rng);
      speeds.push_back(static_cast<double>(traj.displacement_e1()) / cfg.horizon);
      if (r == 0 && !cfg.records.empty()) first_traj = std::move(traj);
    }
    stats::Moments m = stats::moments(speeds);
    stats::Interval ci = stats::mean_ci(m, 0.99);
    j["displacement_rate"] = {{"point", m.mean}, {"ci_low", ci.lo}, {"ci_high", ci.hi},
                              {"se", m.se()},    {"runs", runs}};
    add_closed_form_columns(j, params);
    if (!cfg.records.empty()) write_trajectory_csv(cfg.records, first_traj, cfg.d);
  }
  return j;
}

OrderedJson run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<double> lambdas = cfg.lambda_grid.empty() ? std::vector<double>{cfg.lambda}
                                                        : cfg.lambda_grid;
  std::vector<double> mus = cfg.mu_grid.empty() ? std::vector<double>{cfg.mu} : cfg.mu_grid;
  std::size_t grid = lambdas.size() * mus.size();
  if (grid > 10000)
    throw ConstructionError(
        "sweep: grid has more than 10000 points; coarsen the lambda/mu grids");
  std::uint64_t cycles = cfg.cycles > 0 ? cfg.cycles : 10000;

  OrderedJson j;
  j["version"] = kVersionString;
  j["config"] = config_echo(cfg);
  OrderedJson rows = OrderedJson::array();
  std::vector<std::string> csv_rows;
  std::uint64_t row_index = 0;
  for (double lam : lambdas) {
    for (double m : mus) {
      ExperimentConfig point = cfg;
      point.lambda = lam;
      point.mu = m;
      WalkerParams params = point.walker_params();
      CycleBatch batch = run_cycles_parallel(params, cycles, cfg.seed, cfg.replicas, {},
                                             row_index * cfg.replicas);
      SpeedEstimate est = estimate_speed(batch.records);
      OrderedJson row;
      row["lambda"] = lam;
      row["mu"] = m;
      row["speed"] = est.point;
      row["ci_low"] = est.ci_low;
      row["ci_high"] = est.ci_high;
      row["se"] = est.se;
      add_closed_form_columns(row, params);
      double zeroth = row.contains("cf_zeroth") ? row["cf_zeroth"].get<double>()
                                                : closed_forms::v_asym(params.law, m);
      row["gap_vasym"] = zeroth - est.point;
      rows.push_back(row);
      std::ostringstream line;
      line << lam << ',' << m << ',' << format_double(est.point) << ','
           << format_double(est.ci_low) << ',' << format_double(est.ci_high) << ','
           << format_double(est.se) << ',' << format_double(zeroth) << ','
           << (row.contains("cf_first") ? format_double(row["cf_first"].get<double>()) : "nan")
           << ','
           << (row.contains("cf_prediction")
                   ? format_double(row["cf_prediction"].get<double>())
                   : "nan")
           << ',' << format_double(zeroth - est.point);
      csv_rows.push_back(line.str());
      ++row_index;
    }
  }
  j["rows"] = rows;
  if (!cfg.table.empty())
    write_table_csv(cfg.table,
                    "lambda,mu,speed,ci_low,ci_high,se,cf_zeroth,cf_first,cf_prediction,"
                    "gap_vasym",
                    csv_rows);
  return j;
}

OrderedJson run_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  ConductanceLaw law = cfg.law.value_or(ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0));
  std::uint64_t samples = cfg.samples > 0 ? cfg.samples : 20000;
  std::uint64_t cycles = cfg.cycles > 0 ? cfg.cycles : 30000;

  OrderedJson j;
  j["version"] = kVersionString;
  j["config"] = config_echo(cfg);
  OrderedJson reports = OrderedJson::array();
  bool all_pass = true;
  auto push = [&](const TestReport& rep, std::uint64_t stream) {
    reports.push_back(report_json(rep, cfg.seed));
    all_pass = all_pass && rep.pass;
    (void)stream;
  };

  {
    RngStream rng(cfg.seed, 101);
    push(stationarity_test(cfg.mu, law, 1.0, samples, rng), 101);
  }
  {
    RngStream rng(cfg.seed, 102);
    DetailedBalanceReport db =
        detailed_balance_test(cfg.M, cfg.d, 0.5, cfg.mu, law, cfg.time_point,
                              std::max<std::uint64_t>(samples * 10, 100000), rng);
    push(db.report, 102);
  }
  {
    RngStream rng(cfg.seed, 103);
    push(cbrw_symmetry_test(cfg.steps, 1.0, cfg.mu, law, samples, rng), 103);
  }
  push(speed_positivity_test(WalkerKind::vbrw, 1.0, cfg.mu, law, cycles, cfg.seed, cfg.replicas),
       104);
  push(speed_positivity_test(WalkerKind::cbrw, 1.0, cfg.mu, law, cycles, cfg.seed + 1,
                             cfg.replicas),
       105);
  {
    RngStream rng(cfg.seed, 106);
    push(cbrw_frozen_path_check(1.0, law, rng), 106);
  }
  {
    RngStream rng(cfg.seed, 107);
    push(cbrw_reweighted_path_test(1.0, law, samples, rng), 107);
  }

  j["reports"] = reports;
  j["pass"] = all_pass;
  return j;
}

OrderedJson run_validate_closed_forms(const ExperimentConfig& cfg) {
  namespace cf = closed_forms;
  cfg.validate();
  RngStream rng(cfg.seed, 7001);

  struct IdentityCheck {
    std::string name;
    double max_dev = 0.0;
    double tol = 1e-12;
    bool pass = true;
  };
  std::vector<IdentityCheck> checks;

  auto random_discrete_law = [&](RngStream& r) {
    int n_atoms = 2 + static_cast<int>(r.uniform_below(3));
    std::vector<ConductanceLaw::Atom> atoms;
    double total = 0.0;
    double maxv = 0.0;
    for (int i = 0; i < n_atoms; ++i) {
      double w = 0.05 + r.uniform() * 2.0;
      double p = 0.1 + r.uniform();
      atoms.push_back({w, p});
      total += p;
      maxv = std::max(maxv, w);
    }
    for (auto& a : atoms) a.prob /= total;
    // Pin the sum to 1 exactly so validation never trips on rounding.
    double rest = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) rest += atoms[i].prob;
    atoms.back().prob = 1.0 - rest;
    return ConductanceLaw::finite_discrete(atoms, maxv);
  };

  {
    IdentityCheck c{"first_order_representation", 0.0, 1e-12, true};
    for (int trial = 0; trial < 100; ++trial) {
      ConductanceLaw law = random_discrete_law(rng);
      double mu = 0.05 + rng.uniform() * 9.95;
      int d = 2 + static_cast<int>(rng.uniform_below(3));
      double lhs = cf::nvbrw_expansion(law, mu, d).first;
      double rhs = (2.0 * d - 2.0) * cf::alt_first_order(law, mu);
      c.max_dev = std::max(c.max_dev, std::fabs(lhs - rhs));
    }
    c.pass = c.max_dev <= c.tol;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"two_point_specialization", 0.0, 1e-12, true};
    for (int trial = 0; trial < 100; ++trial) {
      double mu = 0.05 + rng.uniform() * 9.95;
      double alpha = 0.01 + rng.uniform() * 0.98;
      ConductanceLaw law = ConductanceLaw::two_point(alpha, 1.0, 0.5, 1.0);
      double dev = std::fabs(cf::alt_first_order(law, mu) - cf::two_point_A(mu, alpha));
      c.max_dev = std::max(c.max_dev, dev);
    }
    c.pass = c.max_dev <= c.tol;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"moment_ratio_identity", 0.0, 1e-12, true};
    for (int trial = 0; trial < 100; ++trial) {
      ConductanceLaw law = trial % 2 == 0
                               ? random_discrete_law(rng)
                               : ConductanceLaw::uniform_interval(rng.uniform() * 0.5,
                                                                  0.6 + rng.uniform(), 2.0);
      double mu = 0.05 + rng.uniform() * 9.95;
      double dev = std::fabs(law.moment(MomentFunctional::ratio, mu) +
                             mu * law.moment(MomentFunctional::inv1, mu) - 1.0);
      c.max_dev = std::max(c.max_dev, dev);
    }
    c.pass = c.max_dev <= c.tol;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"two_point_A_reference_value", 0.0, 1e-12, true};
    c.max_dev = std::fabs(cf::two_point_A(0.1, 0.1) - 0.19 / 2.6);
    c.pass = c.max_dev <= c.tol && cf::two_point_A(0.1, 0.1) > 0.0;
    checks.push_back(c);
  }
  {
    // Relative deviations; the moments themselves blow up like e^{rate/mu}.
    IdentityCheck c{"regen_moment_relation", 0.0, 1e-12, true};
    for (int trial = 0; trial < 100; ++trial) {
      double lam = rng.uniform() * 3.0;
      double kappa = 0.2 + rng.uniform() * 3.0;
      int d = 1 + static_cast<int>(rng.uniform_below(4));
      double rate = kappa * cf::z_lambda(lam, d);
      double mu = rate / (0.2 + rng.uniform() * 20.0);  // rate/mu in (0.2, 20.2)
      cf::RegenMoments rm = cf::vbrw_regen_moments(lam, mu, kappa, d);
      double rel = std::fabs(rm.expected_tau * rate - rm.expected_attempts) /
                   rm.expected_attempts;
      double ret = std::fabs(cf::bd_discrete_return_mean(rate / mu) -
                             2.0 * rm.expected_attempts) /
                   (2.0 * rm.expected_attempts);
      c.max_dev = std::max({c.max_dev, rel, ret});
    }
    c.pass = c.max_dev <= c.tol;
    checks.push_back(c);
  }
  {
    // Sign predictions and smoothness in mu are qualitative; deviation slot
    // holds the margin by which they held.
    IdentityCheck c{"sign_predictions", 0.0, 0.0, true};
    bool ok = cf::two_point_A(0.1, 0.1) > 0.0;
    ConductanceLaw delta1 = ConductanceLaw::point_mass(1.0, 1.0);
    double worst = 1e300;
    for (double mu = 0.1; mu <= 10.0; mu += 0.1) {
      double v = cf::alt_first_order(delta1, mu);
      ok = ok && v < 0.0;
      worst = std::min(worst, -v);
    }
    c.max_dev = worst;
    c.pass = ok;
    c.tol = 0.0;
    checks.push_back(c);
  }
  {
    IdentityCheck c{"mu_continuity", 0.0, 0.05, true};
    ConductanceLaw law = ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0);
    double prev_v = cf::v_asym(law, 0.05);
    double prev_a = cf::alt_first_order(law, 0.05);
    for (double mu = 0.06; mu <= 10.0; mu += 0.01) {
      double v = cf::v_asym(law, mu);
      double a = cf::alt_first_order(law, mu);
      c.max_dev = std::max({c.max_dev, std::fabs(v - prev_v), std::fabs(a - prev_a)});
      prev_v = v;
      prev_a = a;
    }
    c.pass = c.max_dev <= c.tol;
    checks.push_back(c);
  }

  OrderedJson j;
  j["version"] = kVersionString;
  j["config"] = config_echo(cfg);
  OrderedJson arr = OrderedJson::array();
  bool all_pass = true;
  std::cout << "closed-form identity suite\n";
  for (const auto& c : checks) {
    OrderedJson cj;
    cj["name"] = c.name;
    cj["max_abs_deviation"] = c.max_dev;
    cj["tolerance"] = c.tol;
    cj["pass"] = c.pass;
    arr.push_back(cj);
    all_pass = all_pass && c.pass;
    std::cout << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name
              << "  max_dev=" << c.max_dev << "\n";
  }
  j["identities"] = arr;
  j["pass"] = all_pass;
  return j;
}

OrderedJson run_coupling_check(const ExperimentConfig& cfg) {
  cfg.validate();
  ConductanceLaw law = cfg.law.value_or(ConductanceLaw::two_point(0.1, 1.0, 0.5, 1.0));
  double horizon = cfg.horizon > 0.0 ? cfg.horizon : 100.0;

  OrderedJson j;
  j["version"] = kVersionString;
  j["config"] = config_echo(cfg);
  j["coupling"] = cfg.coupling;

  if (cfg.coupling == "monotone" || cfg.coupling == "dominate") {
    std::uint64_t violations = 0, events = 0;
    for (std::uint64_t p = 0; p < cfg.paths; ++p) {
      RngStream rng(cfg.seed, p);
      CoupledPair pair =
          cfg.coupling == "monotone"
              ? coupled_monotone_d1(cfg.lambda, cfg.epsilon, cfg.mu, law, horizon, rng)
              : coupled_nvbrw_dominated_by_tasym(cfg.lambda, cfg.mu, law, horizon, rng);
      violations += pair.dominance_violations;
      events += pair.shared_events.size();
    }
    j["paths"] = cfg.paths;
    j["events"] = events;
    j["violations"] = violations;
    j["pass"] = violations == 0;
    return j;
  }
  if (cfg.coupling == "bias-pair") {
    std::uint64_t cycles = cfg.cycles > 0 ? cfg.cycles : 10000;
    RngStream rng(cfg.seed, 0);
    BiasPairResult res = coupled_bias_pair_cycles(cfg.lambda, cfg.epsilon, cfg.mu, law, cfg.d,
                                                  cycles, rng);
    std::vector<double> gaps, gaps_clean;
    std::uint64_t very_bad = 0;
    std::uint64_t clean_nonzero = 0;
    for (const auto& c : res.cycles) {
      gaps.push_back(static_cast<double>(c.displacement_gap()));
      if (c.saw_very_bad) {
        ++very_bad;
      } else {
        gaps_clean.push_back(static_cast<double>(c.displacement_gap()));
        if (c.displacement_gap() != 0) ++clean_nonzero;
      }
    }
    stats::Moments gm = stats::moments(gaps);
    stats::Interval gci = stats::mean_ci(gm, 0.99);
    j["cycles"] = cycles;
    j["very_bad_fraction"] = static_cast<double>(very_bad) / static_cast<double>(cycles);
    j["mean_gap"] = gm.mean;
    j["gap_ci"] = {gci.lo, gci.hi};
    j["clean_cycles_nonzero_gap"] = clean_nonzero;
    j["infected_size_mismatches"] = res.infected_size_mismatches;
    j["pass"] = clean_nonzero == 0 && res.infected_size_mismatches == 0;
    return j;
  }
  if (cfg.coupling == "dim-gap") {
    std::vector<double> lambdas =
        cfg.lambda_grid.empty() ? std::vector<double>{2.0, 3.0, 4.0} : cfg.lambda_grid;
    std::uint64_t cycles = cfg.cycles > 0 ? cfg.cycles : 100000;
    OrderedJson rows = OrderedJson::array();
    std::vector<std::string> csv_rows;
    std::vector<double> xs, ys;
    for (double lam : lambdas) {
      GapEstimate g =
          dim_reduction_gap(lam, cfg.mu, law, cfg.d, cycles, cfg.seed, cfg.replicas);
      OrderedJson row;
      row["lambda"] = lam;
      row["gap"] = g.gap;
      row["ci_low"] = g.ci_low;
      row["ci_high"] = g.ci_high;
      row["speed_1d"] = g.speed_1d.point;
      row["speed_dd"] = g.speed_dd.point;
      rows.push_back(row);
      std::ostringstream line;
      line << lam << ',' << format_double(g.gap) << ',' << format_double(g.ci_low) << ','
           << format_double(g.ci_high) << ',' << format_double(g.speed_1d.point) << ','
           << format_double(g.speed_dd.point);
      csv_rows.push_back(line.str());
      if (g.gap > 0.0) {
        xs.push_back(lam);
        ys.push_back(std::log(g.gap));
      }
    }
    j["rows"] = rows;
    if (xs.size() >= 2) {
      stats::LinFit fit = stats::linear_fit(xs, ys);
      j["log_gap_slope"] = fit.slope;
      j["log_gap_r2"] = fit.r2;
    }
    j["pass"] = true;
    if (!cfg.table.empty())
      write_table_csv(cfg.table, "lambda,gap,ci_low,ci_high,speed_1d,speed_dd", csv_rows);
    return j;
  }
  throw ConstructionError("coupling-check: unknown kind '" + cfg.coupling +
                          "' (expected monotone, dominate, bias-pair, dim-gap)");
}

OrderedJson run_bd_check(const ExperimentConfig& cfg) {
  cfg.validate();
  std::uint64_t samples = cfg.samples > 0 ? cfg.samples : 100000;
  BDParams bd{cfg.bd_alpha, cfg.mu, cfg.bd_L};
  RngStream rng(cfg.seed, 0);

  std::vector<double> taus, steps;
  taus.reserve(samples);
  steps.reserve(samples);
  for (std::uint64_t i = 0; i < samples; ++i) {
    BDReturn r = simulate_bd_return(bd, rng);
    taus.push_back(r.tau);
    steps.push_back(static_cast<double>(r.steps));
  }
  stats::Moments tm = stats::moments(taus);
  stats::Moments sm = stats::moments(steps);

  OrderedJson j;
  j["version"] = kVersionString;
  j["config"] = config_echo(cfg);
  j["alpha"] = bd.alpha;
  j["L"] = bd.L;
  j["mean_tau"] = tm.mean;
  j["mean_steps"] = sm.mean;
  bool pass = true;
  if (bd.L == 1) {
    double exp_tau = std::exp(bd.alpha / bd.mu) / bd.alpha;
    double exp_steps = closed_forms::bd_discrete_return_mean(bd.alpha / bd.mu);
    double z_tau = (tm.mean - exp_tau) / tm.se();
    double z_steps = (sm.mean - exp_steps) / sm.se();
    j["expected_tau"] = exp_tau;
    j["expected_steps"] = exp_steps;
    j["z_tau"] = z_tau;
    j["z_steps"] = z_steps;
    pass = pass && std::fabs(z_tau) <= 4.0 && std::fabs(z_steps) <= 4.0;
  }
  TailFit fit = tail_exponent_fit(taus);
  j["tail_rate"] = fit.rate;
  j["tail_r2"] = fit.r_squared;
  pass = pass && fit.rate > 0.0 && fit.r_squared > 0.9;

  // Large-deviation rate positivity over random admissible walk parameters.
  RngStream lrng(cfg.seed, 1);
  double min_rate = 1e300;
  for (int i = 0; i < 100; ++i) {
    int L = 1 + static_cast<int>(lrng.uniform_below(4));
    double p_lo = static_cast<double>(L) / (L + 1.0);
    double p = p_lo + (1.0 - p_lo - 1e-3) * lrng.uniform() + 1e-3;
    RWParams rw{p, L};
    double y = rw.drift() * (0.2 + 0.6 * lrng.uniform());
    min_rate = std::min(min_rate, ld_lambda_star(rw, y).rate);
  }
  j["min_ld_rate"] = min_rate;
  pass = pass && min_rate > 0.0;
  j["pass"] = pass;

  if (!cfg.records.empty()) {
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < taus.size(); ++i)
      rows.push_back(format_double(taus[i]) + "," + format_double(steps[i]));
    write_table_csv(cfg.records, "tau,T", rows);
  }
  return j;
}

int run_and_write(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  // `sweep --out table.csv --format csv` writes the table to --out and the
  // summary JSON to stdout.
  if (cfg.experiment == "sweep" && cfg.format == "csv" && !cfg.out.empty() &&
      cfg.table.empty()) {
    cfg.table = cfg.out;
    cfg.out.clear();
  }
  OrderedJson j;
  if (cfg.experiment == "simulate")
    j = run_simulate(cfg);
  else if (cfg.experiment == "sweep")
    j = run_sweep(cfg);
  else if (cfg.experiment == "verify")
    j = run_verify(cfg);
  else if (cfg.experiment == "validate-closed-forms")
    j = run_validate_closed_forms(cfg);
  else if (cfg.experiment == "coupling-check")
    j = run_coupling_check(cfg);
  else if (cfg.experiment == "bd-check")
    j = run_bd_check(cfg);
  else
    throw ConstructionError("unknown experiment '" + cfg.experiment + "'");

  std::string payload = j.dump(2);
  payload += '\n';
  if (cfg.out.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) throw ConstructionError("cannot open output file '" + cfg.out + "'");
    out << payload;
  }
  if (j.contains("pass") && !j["pass"].get<bool>()) return 1;
  return 0;
}

}  // namespace dynwalk
