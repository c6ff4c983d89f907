#pragma once

// Scenario runner behind the command-line tool: configuration, parallel
// seeded trials, and CSV / JSON-lines output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "demonlab/demon.hpp"
#include "demonlab/info_theory.hpp"
#include "demonlab/policy_search.hpp"

namespace demonlab::harness {

using nlohmann::json;

inline constexpr int kExitPass = 0;
inline constexpr int kExitStatistical = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kSweepSchemaVersion = 1;

enum class Format { Csv, JsonLines };

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"sweep",   "cycle",   "livelock",     "extract-first",
                                              "delayed", "quantum", "policy-search"};
  return names;
}

struct RunConfig {
  std::string scenario;
  std::vector<double> ell_over_L;          // empty: scenario default
  std::optional<std::uint64_t> cycles;     // empty: scenario default
  std::uint64_t n = 10'000;                // delayed-erasure tape length
  std::vector<std::uint64_t> seeds{1};
  std::string out;                         // empty: standard output
  Format format = Format::Csv;
  std::string policy = "standard";         // cycle: preset name or JSON file
  std::string force = "right";             // livelock: left, right or none
  std::uint64_t max_steps = 64;            // livelock
  std::size_t max_control_states = 2;      // policy-search
  std::uint64_t horizon = 50;              // policy-search
  std::uint64_t seed_count = 1000;         // policy-search
};

inline std::vector<double> default_points(const std::string& scenario) {
  if (scenario == "sweep") return {0.5, 0.25, 0.125};
  if (scenario == "delayed") return {0.25, 0.5};
  return {0.25};
}

inline std::uint64_t default_cycles(const std::string& scenario) { return scenario == "cycle" ? 10 : 100'000; }

inline void validate(const RunConfig& c) {
  if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end())
    throw InvalidInput("unknown scenario '" + c.scenario + "'");
  for (double p : c.ell_over_L)
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("ell_over_L values must lie in (0,1)");
  if (c.cycles && *c.cycles < 1) throw InvalidInput("cycles must be at least 1");
  if (c.n < 1) throw InvalidInput("n must be at least 1");
  if (c.seeds.empty()) throw InvalidInput("at least one seed is required");
  if (c.force != "left" && c.force != "right" && c.force != "none")
    throw InvalidInput("force must be left, right or none");
  if (c.max_steps < 4) throw InvalidInput("max_steps must be at least 4");
  if (c.max_control_states < 1 || c.max_control_states > 3) throw InvalidInput("max_control_states must be 1..3");
  if (c.horizon < 1 || c.seed_count < 1) throw InvalidInput("horizon and seed_count must be positive");
}

inline std::string to_string(Format f) { return f == Format::Csv ? "csv" : "jsonl"; }

inline Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "jsonl" || s == "json-lines" || s == "json") return Format::JsonLines;
  throw InvalidInput("format must be csv or jsonl");
}

inline json config_to_json(const RunConfig& c) {
  json j{{"scenario", c.scenario},
         {"ell_over_L", c.ell_over_L},
         {"n", c.n},
         {"seeds", c.seeds},
         {"out", c.out},
         {"format", to_string(c.format)},
         {"policy", c.policy},
         {"force", c.force},
         {"max_steps", c.max_steps},
         {"max_control_states", c.max_control_states},
         {"horizon", c.horizon},
         {"seed_count", c.seed_count}};
  if (c.cycles) j["cycles"] = *c.cycles;
  return j;
}

/// Reads the keys present in `j` over `base`; unknown keys are rejected.
inline RunConfig config_from_json(const json& j, RunConfig base = {}) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scenario") base.scenario = v.get<std::string>();
      else if (key == "ell_over_L") base.ell_over_L = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
      else if (key == "cycles") base.cycles = v.get<std::uint64_t>();
      else if (key == "n") base.n = v.get<std::uint64_t>();
      else if (key == "seed") base.seeds = {v.get<std::uint64_t>()};
      else if (key == "seeds") base.seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "out") base.out = v.get<std::string>();
      else if (key == "format") base.format = format_from_string(v.get<std::string>());
      else if (key == "policy") base.policy = v.get<std::string>();
      else if (key == "force") base.force = v.get<std::string>();
      else if (key == "max_steps") base.max_steps = v.get<std::uint64_t>();
      else if (key == "max_control_states") base.max_control_states = v.get<std::size_t>();
      else if (key == "horizon") base.horizon = v.get<std::uint64_t>();
      else if (key == "seed_count") base.seed_count = v.get<std::uint64_t>();
      else throw InvalidInput("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad config value: ") + e.what());
  }
  return base;
}

/// Worker count: hardware concurrency, capped by DEMON_THREADS when set.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DEMON_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw InvalidInput("DEMON_THREADS must be a positive integer");
    n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads; results land at
/// their own index, so the outcome does not depend on scheduling.
template <class Fn>
auto parallel_map(std::size_t count, unsigned workers, Fn fn) {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(count);
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

inline std::string fixed6(double x) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << x;
  std::string r = s.str();
  if (r == "-0.000000") r = "0.000000";
  return r;
}

inline bool within_3se(double gap, double se) { return gap <= 3.0 * se + 1e-12; }

struct SweepPoint {
  double ell_over_L = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double analytic = 0.0;
  double gap = 0.0;
  bool pass = false;
  std::uint64_t trials = 0;
};

/// Mean net work per cycle of a preset, pooled over seeds, against a
/// closed-form expectation.
template <class Analytic>
std::vector<SweepPoint> run_points(const std::string& preset_name, const std::vector<double>& points,
                                   const std::vector<std::uint64_t>& seeds, std::uint64_t cycles, unsigned workers,
                                   Analytic analytic) {
  const Policy policy = preset(preset_name);
  const std::size_t ns = seeds.size();
  auto stats = parallel_map(points.size() * ns, workers, [&](std::size_t t) {
    const EngineGeometry g = EngineGeometry::from_ratio(points[t / ns]);
    return run_policy(policy, g, seeds[t % ns], cycle_options(cycles)).cycle_net;
  });
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    RunningStats pooled;
    for (std::size_t s = 0; s < ns; ++s) pooled.merge(stats[i * ns + s]);
    SweepPoint p;
    p.ell_over_L = points[i];
    p.empirical = pooled.mean;
    p.std_error = pooled.std_error();
    p.analytic = analytic(EngineGeometry::from_ratio(points[i]));
    p.gap = std::abs(p.empirical - p.analytic);
    p.pass = within_3se(p.gap, p.std_error);
    p.trials = pooled.count;
    out.push_back(p);
  }
  return out;
}

/// Per-cycle mean of the extract-first demon: profitable branch nets
/// lg(L/ell) - 1, the other pays one bit and gains nothing.
inline double extract_first_expectation(const EngineGeometry& g) {
  const double p = g.ratio();
  return p * (std::log2(1.0 / p) - 1.0) - (1.0 - p);
}

inline std::vector<SweepPoint> run_sweep(const RunConfig& c, unsigned workers = 1) {
  const auto pts = c.ell_over_L.empty() ? default_points("sweep") : c.ell_over_L;
  return run_points("standard", pts, c.seeds, c.cycles.value_or(default_cycles("sweep")), workers,
                    [](const EngineGeometry& g) { return expected_cycle_work(g); });
}

inline std::string points_csv(const std::vector<SweepPoint>& pts) {
  std::string s = "ell_over_L,empirical,stderr,analytic,gap,pass\n";
  for (const SweepPoint& p : pts)
    s += fixed6(p.ell_over_L) + "," + fixed6(p.empirical) + "," + fixed6(p.std_error) + "," + fixed6(p.analytic) +
         "," + fixed6(p.gap) + "," + (p.pass ? "true" : "false") + "\n";
  return s;
}

inline std::string points_jsonl(const std::vector<SweepPoint>& pts) {
  std::string s;
  for (const SweepPoint& p : pts)
    s += json{{"schema", kSweepSchemaVersion}, {"ell_over_L", p.ell_over_L}, {"empirical", p.empirical},
              {"stderr", p.std_error},         {"analytic", p.analytic},     {"gap", p.gap},
              {"pass", p.pass},                {"trials", p.trials}}
             .dump() +
         "\n";
  return s;
}

inline json audit_to_json(const info::MeasurementAudit& a) {
  json j{{"H_before", a.H_before},
         {"H_coherent", a.H_coherent},
         {"H_after", a.H_after},
         {"joint_entropy_change", a.joint_entropy_change},
         {"H_D_before", a.H_D_before},
         {"H_D_after", a.H_D_after},
         {"delta_H_D", a.delta_H_D},
         {"I_before", a.I_before},
         {"I_after", a.I_after},
         {"delta_I_SD", a.delta_I_SD},
         {"H_S_before", a.H_S_before},
         {"H_S_after", a.H_S_after},
         {"commuting", a.commuting},
         {"outcome_probabilities", a.outcome_probabilities},
         {"unitarity_error", a.unitarity_error},
         {"involution_error", a.involution_error}};
  j["holevo_chi"] = a.holevo_chi ? json(*a.holevo_chi) : json(nullptr);
  return j;
}

struct QuantumDemo {
  json report;
  bool pass = false;
};

/// A commuting and a non-commuting measurement of a qubit by a three-state
/// demon, with the checks that go with them.
inline QuantumDemo run_quantum_demo() {
  using info::DensityMatrix;
  const auto z = info::ProjectorSet::computational_basis(2);
  const auto u = info::build_measurement_unitary(z, 0, {1, 2}, 3);

  const auto diag = DensityMatrix::diagonal({0.25, 0.75});
  info::Vector plus(2);
  plus << 1.0, 1.0;
  const auto coherent = DensityMatrix::pure(plus);

  const auto a = info::measurement_entropy_audit(diag, z, 3);
  const auto b = info::measurement_entropy_audit(coherent, z, 3);

  const bool u_ok = u.involution_error() < 1e-12 && u.unitarity_error() < 1e-12;
  const bool a_ok = std::abs(a.joint_entropy_change) <= 1e-10 && std::abs(a.delta_H_D - a.delta_I_SD) <= 1e-10 &&
                    a.commuting;
  const bool b_ok = !b.commuting && b.holevo_chi && std::abs(*b.holevo_chi - 1.0) <= 1e-12 &&
                    std::abs(b.delta_H_D - b.delta_I_SD) <= 1e-10;

  QuantumDemo d;
  d.pass = u_ok && a_ok && b_ok;
  d.report = json{{"unitary", {{"dim_s", u.dim_s()},
                               {"dim_d", u.dim_d()},
                               {"involution_error", u.involution_error()},
                               {"unitarity_error", u.unitarity_error()},
                               {"pass", u_ok}}},
                  {"commuting", {{"state", "diag(0.25, 0.75)"}, {"audit", audit_to_json(a)}, {"pass", a_ok}}},
                  {"non_commuting", {{"state", "|+><+|"}, {"audit", audit_to_json(b)}, {"pass", b_ok}}},
                  {"pass", d.pass}};
  return d;
}

struct ScenarioResult {
  int exit_code = kExitPass;
  std::string content;  // what was (or would be) written
  json summary;
};

namespace detail {

inline Policy load_policy(const std::string& name_or_path) {
  for (const auto& n : preset_names())
    if (n == name_or_path) return preset(n);
  std::ifstream f(name_or_path);
  if (!f) throw InvalidInput("'" + name_or_path + "' is neither a preset nor a readable policy file");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("policy file is not JSON: ") + e.what());
  }
  return policy_from_json(j);
}

inline ScenarioResult points_result(const std::vector<SweepPoint>& pts, Format f) {
  ScenarioResult r;
  r.content = f == Format::Csv ? points_csv(pts) : points_jsonl(pts);
  bool all = true;
  for (const auto& p : pts) all = all && p.pass;
  r.exit_code = all ? kExitPass : kExitStatistical;
  r.summary = {{"points", pts.size()}, {"pass", all}};
  return r;
}

inline ScenarioResult cycle_scenario(const RunConfig& c) {
  const Policy p = load_policy(c.policy);
  const double ratio = c.ell_over_L.empty() ? 0.25 : c.ell_over_L.front();
  RunOptions o = cycle_options(c.cycles.value_or(default_cycles("cycle")));
  o.trace = true;
  const RunReport rep = run_policy(p, EngineGeometry::from_ratio(ratio), c.seeds.front(), o);
  ScenarioResult r;
  if (c.format == Format::JsonLines) {
    for (const auto& t : rep.trace) r.content += json(t).dump() + "\n";
  } else {
    r.content = "cycle,step,op,side,register,work,erased,gas_entropy_delta,gas_entropy_offset,memory_bits,violation\n";
    for (const auto& t : rep.trace)
      r.content += std::to_string(t.cycle) + "," + std::to_string(t.step) + "," + t.op + "," +
                   std::string(to_string(t.side)) + "," + std::string(to_string(t.record)) + "," + fixed6(t.work) +
                   "," + std::to_string(t.erased) + "," + fixed6(t.gas_entropy_delta) + "," +
                   fixed6(t.gas_entropy_offset) + "," + std::to_string(t.memory_bits) + "," + t.violation + "\n";
  }
  double expanded = 0.0;
  for (const auto& t : rep.trace) expanded += t.work;
  r.summary = report_to_json(rep);
  r.summary["policy"] = p.name();
  r.exit_code = rep.termination == Termination::ProtocolError ? kExitStatistical : kExitPass;
  if (expanded != rep.ledger.extracted) r.exit_code = kExitStatistical;
  return r;
}

inline ScenarioResult livelock_scenario(const RunConfig& c, unsigned workers) {
  const double ratio = c.ell_over_L.empty() ? 0.25 : c.ell_over_L.front();
  std::optional<Side> forced;
  if (c.force == "left") forced = Side::Left;
  if (c.force == "right") forced = Side::Right;
  const auto reps = parallel_map(c.seeds.size(), workers, [&](std::size_t i) {
    return run_demon_of_choice_undo_first(EngineGeometry::from_ratio(ratio), c.max_steps, c.seeds[i], forced);
  });
  ScenarioResult r;
  std::size_t locked = 0;
  bool ok = true;
  if (c.format == Format::Csv) r.content = "seed,termination,steps,period,first_step,repeat_step,net\n";
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const RunReport& rep = reps[i];
    const bool ll = rep.termination == Termination::Livelock;
    locked += ll ? 1 : 0;
    if (forced == Side::Right)
      ok = ok && ll && rep.livelock_witness->period() == 2 && rep.steps <= 4 && rep.ledger.net() == 0.0;
    if (forced == Side::Left) ok = ok && !ll;
    if (c.format == Format::Csv) {
      const auto& w = rep.livelock_witness;
      r.content += std::to_string(c.seeds[i]) + "," + std::string(to_string(rep.termination)) + "," +
                   std::to_string(rep.steps) + "," + (w ? std::to_string(w->period()) : "") + "," +
                   (w ? std::to_string(w->first_step) : "") + "," + (w ? std::to_string(w->repeat_step) : "") + "," +
                   fixed6(rep.ledger.net()) + "\n";
    } else {
      json j = report_to_json(rep);
      j["seed"] = c.seeds[i];
      j["forced_side"] = c.force;
      j["ell_over_L"] = ratio;
      r.content += j.dump() + "\n";
    }
  }
  r.exit_code = ok ? kExitPass : kExitStatistical;
  r.summary = {{"runs", reps.size()}, {"livelocked", locked}, {"pass", ok}};
  return r;
}

inline ScenarioResult delayed_scenario(const RunConfig& c, unsigned workers) {
  const auto pts = c.ell_over_L.empty() ? default_points("delayed") : c.ell_over_L;
  const std::size_t ns = c.seeds.size();
  const auto reps = parallel_map(pts.size() * ns, workers, [&](std::size_t t) {
    return run_delayed_erasure_demon(EngineGeometry::from_ratio(pts[t / ns]), c.n, c.seeds[t % ns]);
  });
  const double n = static_cast<double>(c.n);
  const double slack = (std::log2(n + 1.0) + 2.0) / n;
  ScenarioResult r;
  if (c.format == Format::Csv)
    r.content = "ell_over_L,seed,n,ones,k_estimate,extracted_per_cycle,net_per_cycle,realized_entropy,coding_gap,pass\n";
  bool ok = true;
  json per_point = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    RunningStats net;
    bool coding_ok = true;
    for (std::size_t s = 0; s < ns; ++s) {
      const DelayedErasureReport& d = reps[i * ns + s];
      const double gap = std::abs(static_cast<double>(d.k_estimate) / n - d.realized_entropy);
      const bool row_ok = gap <= slack;
      coding_ok = coding_ok && row_ok;
      net.add(d.net_per_cycle);
      if (c.format == Format::Csv) {
        r.content += fixed6(pts[i]) + "," + std::to_string(c.seeds[s]) + "," + std::to_string(d.n) + "," +
                     std::to_string(d.ones) + "," + std::to_string(d.k_estimate) + "," +
                     fixed6(d.extracted_per_cycle) + "," + fixed6(d.net_per_cycle) + "," +
                     fixed6(d.realized_entropy) + "," + fixed6(gap) + "," + (row_ok ? "true" : "false") + "\n";
      } else {
        r.content += json{{"ell_over_L", pts[i]},
                          {"seed", c.seeds[s]},
                          {"n", d.n},
                          {"ones", d.ones},
                          {"k_estimate", d.k_estimate},
                          {"extracted_per_cycle", d.extracted_per_cycle},
                          {"net_per_cycle", d.net_per_cycle},
                          {"realized_entropy", d.realized_entropy},
                          {"coding_gap", gap},
                          {"pass", row_ok}}
                         .dump() +
                     "\n";
      }
    }
    const double se = net.std_error();
    const bool mean_ok = net.mean <= 3.0 * se + 1e-12 && net.mean >= -slack - 3.0 * se;
    ok = ok && mean_ok && coding_ok;
    per_point.push_back({{"ell_over_L", pts[i]}, {"mean_net_per_cycle", net.mean}, {"stderr", se}, {"pass", mean_ok && coding_ok}});
  }
  r.exit_code = ok ? kExitPass : kExitStatistical;
  r.summary = {{"points", per_point}, {"pass", ok}};
  return r;
}

inline ScenarioResult policy_search_scenario(const RunConfig& c, unsigned workers) {
  const double ratio = c.ell_over_L.empty() ? 0.25 : c.ell_over_L.front();
  PolicySearchOptions o;
  o.max_control_states = c.max_control_states;
  o.horizon = c.horizon;
  o.seed_count = c.seed_count;
  o.seed = c.seeds.front();
  o.threads = workers;
  const PolicySearchReport rep = enumerate_policies(EngineGeometry::from_ratio(ratio), o);
  json top = json::array();
  for (const PolicyScore& s : rep.top)
    top.push_back({{"control_states", s.control_states},
                   {"index", s.index},
                   {"mean", s.mean},
                   {"stderr", s.std_error},
                   {"policy", policy_to_json(s.policy)}});
  json j{{"ell_over_L", ratio},
         {"max_control_states", c.max_control_states},
         {"horizon", c.horizon},
         {"seed_count", c.seed_count},
         {"space_size", rep.space_size},
         {"evaluated", rep.evaluated},
         {"disqualified", rep.disqualified},
         {"best_mean", rep.top.empty() ? 0.0 : rep.top.front().mean},
         {"best_stderr", rep.top.empty() ? 0.0 : rep.top.front().std_error},
         {"pass", rep.pass},
         {"top", top}};
  ScenarioResult r;
  r.content = j.dump() + "\n";
  r.exit_code = rep.pass ? kExitPass : kExitStatistical;
  r.summary = {{"space_size", rep.space_size}, {"best_mean", j["best_mean"]}, {"pass", rep.pass}};
  return r;
}

}  // namespace detail

/// Runs one scenario and writes its output to config.out (atomically) when a
/// path is given. Configuration problems surface as InvalidInput before any
/// file is touched.
inline ScenarioResult run_scenario(const RunConfig& c, unsigned workers) {
  validate(c);
  ScenarioResult r;
  if (c.scenario == "sweep") {
    r = detail::points_result(run_sweep(c, workers), c.format);
  } else if (c.scenario == "extract-first") {
    const auto pts = c.ell_over_L.empty() ? default_points("extract-first") : c.ell_over_L;
    r = detail::points_result(run_points("choice-extract-first", pts, c.seeds,
                                         c.cycles.value_or(default_cycles("extract-first")), workers,
                                         extract_first_expectation),
                              c.format);
  } else if (c.scenario == "cycle") {
    r = detail::cycle_scenario(c);
  } else if (c.scenario == "livelock") {
    r = detail::livelock_scenario(c, workers);
  } else if (c.scenario == "delayed") {
    r = detail::delayed_scenario(c, workers);
  } else if (c.scenario == "quantum") {
    QuantumDemo q = run_quantum_demo();
    r.content = c.format == Format::JsonLines ? q.report.dump() + "\n" : q.report.dump(2) + "\n";
    r.exit_code = q.pass ? kExitPass : kExitStatistical;
    r.summary = {{"pass", q.pass}};
  } else {
    r = detail::policy_search_scenario(c, workers);
  }
  if (!c.out.empty()) write_atomic(c.out, r.content);
  return r;
}

inline ScenarioResult run_scenario(const RunConfig& c) { return run_scenario(c, worker_count()); }

}  // namespace demonlab::harness
