// Command-line harness: one subcommand per scenario.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "demonlab/harness.hpp"

namespace {

using demonlab::harness::RunConfig;

struct Flags {
  std::string config;
  std::vector<double> ell_over_L;
  std::uint64_t cycles = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string format;
  std::string policy;
  std::string force;
  std::uint64_t max_steps = 0;
  std::size_t max_states = 0;
  std::uint64_t horizon = 0;
  std::uint64_t seed_count = 0;
};

struct Bound {
  CLI::App* sub = nullptr;
  std::vector<std::pair<std::string, CLI::Option*>> opts;
  bool given(const std::string& name) const {
    for (const auto& [k, o] : opts)
      if (k == name) return o->count() > 0;
    return false;
  }
};

Bound add_scenario(CLI::App& app, const std::string& name, const std::string& help, Flags& f) {
  Bound b;
  b.sub = app.add_subcommand(name, help);
  auto add = [&](const std::string& key, CLI::Option* o) { b.opts.emplace_back(key, o); };
  add("config", b.sub->add_option("--config", f.config, "JSON config file; flags override it")->check(CLI::ExistingFile));
  add("ell", b.sub->add_option("--ell-over-l", f.ell_over_L, "ell/L value(s) in (0,1)")->delimiter(','));
  add("cycles", b.sub->add_option("--cycles", f.cycles, "cycles per seed"));
  add("n", b.sub->add_option("--n", f.n, "records per delayed-erasure run"));
  add("seed", b.sub->add_option("--seed", f.seed, "single seed"));
  add("seeds", b.sub->add_option("--seeds", f.seeds, "seed list")->delimiter(','));
  add("out", b.sub->add_option("--out", f.out, "output file (default: stdout)"));
  add("format", b.sub->add_option("--format", f.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"})));
  if (name == "cycle" || name == "run") add("policy", b.sub->add_option("--policy", f.policy, "preset name or policy JSON file"));
  if (name == "livelock" || name == "run") {
    add("force", b.sub->add_option("--force", f.force, "trapped side: left, right or none")
                     ->check(CLI::IsMember({"left", "right", "none"})));
    add("max_steps", b.sub->add_option("--max-steps", f.max_steps, "step budget per run"));
  }
  if (name == "policy-search" || name == "run") {
    add("max_states", b.sub->add_option("--max-states", f.max_states, "largest control-state count"));
    add("horizon", b.sub->add_option("--horizon", f.horizon, "steps per simulated run"));
    add("seed_count", b.sub->add_option("--seed-count", f.seed_count, "common random seeds"));
  }
  return b;
}

RunConfig build_config(const Bound& b, const Flags& f) {
  RunConfig c;
  if (b.given("config")) {
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw demonlab::InvalidInput(std::string("config file is not JSON: ") + e.what());
    }
    c = demonlab::harness::config_from_json(j);
  }
  if (b.sub->get_name() != "run") {
    if (!c.scenario.empty() && c.scenario != b.sub->get_name())
      throw demonlab::InvalidInput("config names scenario '" + c.scenario + "' but the subcommand is '" +
                                   b.sub->get_name() + "'");
    c.scenario = b.sub->get_name();
  }
  if (b.given("ell")) c.ell_over_L = f.ell_over_L;
  if (b.given("cycles")) c.cycles = f.cycles;
  if (b.given("n")) c.n = f.n;
  if (b.given("seed")) c.seeds = {f.seed};
  if (b.given("seeds")) c.seeds = f.seeds;
  if (b.given("out")) c.out = f.out;
  if (b.given("format")) c.format = demonlab::harness::format_from_string(f.format);
  if (b.given("policy")) c.policy = f.policy;
  if (b.given("force")) c.force = f.force;
  if (b.given("max_steps")) c.max_steps = f.max_steps;
  if (b.given("max_states")) c.max_control_states = f.max_states;
  if (b.given("horizon")) c.horizon = f.horizon;
  if (b.given("seed_count")) c.seed_count = f.seed_count;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  namespace h = demonlab::harness;
  CLI::App app{"Szilard/Gabor engine and demon simulator"};
  app.require_subcommand(1, 1);
  Flags flags;
  std::vector<Bound> subs;
  subs.push_back(add_scenario(app, "sweep", "standard demon against the expected-work curve", flags));
  subs.push_back(add_scenario(app, "cycle", "single traced run of a policy", flags));
  subs.push_back(add_scenario(app, "livelock", "undo-first demon of choice", flags));
  subs.push_back(add_scenario(app, "extract-first", "extract-first demon of choice", flags));
  subs.push_back(add_scenario(app, "delayed", "delayed-erasure demon with compressed records", flags));
  subs.push_back(add_scenario(app, "quantum", "measurement entropy audit", flags));
  subs.push_back(add_scenario(app, "policy-search", "exhaustive search over small policies", flags));
  subs.push_back(add_scenario(app, "run", "scenario taken from --config", flags));
  subs.back().sub->get_option("--config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return h::kExitUsage;
  }

  for (const Bound& b : subs) {
    if (!b.sub->parsed()) continue;
    try {
      const RunConfig cfg = build_config(b, flags);
      const h::ScenarioResult r = h::run_scenario(cfg, h::worker_count());
      if (cfg.out.empty()) std::cout << r.content << std::flush;
      std::cerr << r.summary.dump() << "\n";
      return r.exit_code;
    } catch (const demonlab::InvalidInput& e) {
      std::cerr << "error: " << e.what() << "\n\n" << app.help();
      return h::kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return h::kExitUsage;
    }
  }
  std::cerr << app.help();
  return h::kExitUsage;
}
