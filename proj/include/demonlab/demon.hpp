#pragma once

// Deterministic demons. A policy maps (control state, register) to an action
// and a next control state; it never sees the engine.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "demonlab/coding.hpp"
#include "demonlab/engine.hpp"
#include "demonlab/rng.hpp"

namespace demonlab {

enum class Action : std::uint8_t {
  InsertPartition,
  Measure,
  UndoMeasure,
  Expand,
  ExtractPartition,
  Erase,
  StoreRecord,
  Halt,
};

inline constexpr std::array<Action, 8> kAllActions{Action::InsertPartition, Action::Measure,     Action::UndoMeasure,
                                                   Action::Expand,          Action::ExtractPartition, Action::Erase,
                                                   Action::StoreRecord,     Action::Halt};

constexpr std::string_view to_string(Action a) {
  switch (a) {
    case Action::InsertPartition: return "insert_partition";
    case Action::Measure: return "measure";
    case Action::UndoMeasure: return "undo_measurement";
    case Action::Expand: return "expand";
    case Action::ExtractPartition: return "extract_partition";
    case Action::Erase: return "erase";
    case Action::StoreRecord: return "store_record";
    case Action::Halt: return "halt";
  }
  return "?";
}

inline std::optional<Action> action_from_string(std::string_view s) {
  for (Action a : kAllActions)
    if (to_string(a) == s) return a;
  return std::nullopt;
}

inline std::optional<Register> register_from_string(std::string_view s) {
  for (Register r : {Register::Blank, Register::Left, Register::Right})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct Transition {
  Action action = Action::Halt;
  ControlState next = 0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

constexpr std::size_t register_index(Register r) { return static_cast<std::size_t>(r); }

class Policy {
 public:
  using Row = std::array<Transition, 3>;  // indexed by register: blank, left, right

  Policy(std::string name, std::vector<std::string> states, std::vector<Row> table, ControlState initial = 0)
      : name_(std::move(name)), states_(std::move(states)), table_(std::move(table)), initial_(initial) {
    if (states_.empty()) throw InvalidInput("policy needs at least one control state");
    if (table_.size() != states_.size()) throw InvalidInput("policy table must have one row per control state");
    if (initial_ >= states_.size()) throw InvalidInput("initial control state out of range");
    for (const Row& row : table_)
      for (const Transition& t : row)
        if (t.next >= states_.size()) throw InvalidInput("transition targets an undeclared control state");
  }

  /// The whole decision input: control state and register content.
  const Transition& decide(ControlState pc, Register r) const { return table_[pc][register_index(r)]; }

  const std::string& name() const noexcept { return name_; }
  std::size_t control_states() const noexcept { return states_.size(); }
  const std::vector<std::string>& state_names() const noexcept { return states_; }
  ControlState initial() const noexcept { return initial_; }
  const std::vector<Row>& table() const noexcept { return table_; }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::string name_;
  std::vector<std::string> states_;
  std::vector<Row> table_;
  ControlState initial_;
};

inline nlohmann::json policy_to_json(const Policy& p) {
  nlohmann::json tr = nlohmann::json::array();
  for (std::size_t s = 0; s < p.control_states(); ++s)
    for (Register r : {Register::Blank, Register::Left, Register::Right}) {
      const Transition& t = p.decide(static_cast<ControlState>(s), r);
      tr.push_back({{"state", p.state_names()[s]},
                    {"register", to_string(r)},
                    {"action", to_string(t.action)},
                    {"next", p.state_names()[t.next]}});
    }
  return {{"name", p.name()},
          {"control_states", p.state_names()},
          {"initial", p.state_names()[p.initial()]},
          {"transitions", std::move(tr)}};
}

/// Parses the JSON policy format; every (state, register) pair must be
/// listed exactly once.
inline Policy policy_from_json(const nlohmann::json& j) {
  try {
    const auto names = j.at("control_states").get<std::vector<std::string>>();
    auto lookup = [&](const std::string& s) -> ControlState {
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == s) return static_cast<ControlState>(i);
      throw InvalidInput("unknown control state '" + s + "'");
    };
    for (std::size_t i = 0; i < names.size(); ++i)
      if (lookup(names[i]) != i) throw InvalidInput("duplicate control state '" + names[i] + "'");
    std::vector<Policy::Row> table(names.size());
    std::vector<std::array<bool, 3>> seen(names.size(), {false, false, false});
    for (const auto& t : j.at("transitions")) {
      const ControlState s = lookup(t.at("state").get<std::string>());
      const auto r = register_from_string(t.at("register").get<std::string>());
      const auto a = action_from_string(t.at("action").get<std::string>());
      if (!r) throw InvalidInput("unknown register value");
      if (!a) throw InvalidInput("unknown action");
      const ControlState next = t.contains("next") ? lookup(t.at("next").get<std::string>()) : s;
      auto& flag = seen[s][register_index(*r)];
      if (flag) throw InvalidInput("transition listed twice for state '" + names[s] + "'");
      flag = true;
      table[s][register_index(*r)] = {*a, next};
    }
    for (std::size_t s = 0; s < names.size(); ++s)
      for (bool b : seen[s])
        if (!b) throw InvalidInput("policy is not total in state '" + names[s] + "'");
    const ControlState init = j.contains("initial") ? lookup(j.at("initial").get<std::string>()) : 0;
    return Policy(j.value("name", std::string("custom")), names, std::move(table), init);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed policy document: ") + e.what());
  }
}

namespace detail {

// Three control states: cycle (start), decide (partition in), finish.
inline Policy flowchart(std::string name, Transition on_right, Transition on_finish) {
  constexpr ControlState cycle = 0, decide = 1, finish = 2;
  const Transition clear{Action::Erase, cycle};
  std::vector<Policy::Row> t(3);
  t[cycle] = {Transition{Action::InsertPartition, decide}, clear, clear};
  t[decide] = {Transition{Action::Measure, decide}, Transition{Action::Expand, finish}, on_right};
  t[finish] = {Transition{Action::Halt, finish}, on_finish, on_finish};
  return Policy(std::move(name), {"cycle", "decide", "finish"}, std::move(t), cycle);
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"standard", "choice-undo-first", "choice-extract-first", "delayed-erasure"};
}

inline Policy preset(std::string_view name) {
  const Transition erase{Action::Erase, 0};
  if (name == "standard") return detail::flowchart("standard", {Action::Expand, 2}, erase);
  if (name == "choice-undo-first") return detail::flowchart("choice-undo-first", {Action::UndoMeasure, 1}, erase);
  if (name == "choice-extract-first")
    return detail::flowchart("choice-extract-first", {Action::ExtractPartition, 2}, erase);
  if (name == "delayed-erasure")
    return detail::flowchart("delayed-erasure", {Action::Expand, 2}, {Action::StoreRecord, 0});
  throw InvalidInput("unknown policy preset '" + std::string(name) + "'");
}

/// Engine, memory and books of one running demon.
struct Machine {
  EngineWorld world;
  DemonState demon;
  WorkLedger ledger;
  bool in_cycle = false;
  double cycle_extracted = 0.0;
  double cycle_paid = 0.0;

  Machine(const EngineGeometry& g, ControlState initial) : world(g) { demon.pc = initial; }
};

struct StepOutcome {
  Action action = Action::Halt;
  Violation violation = Violation::None;
  Side side = Side::Anywhere;
  double work = 0.0;
  std::uint64_t erased = 0;
  double gas_entropy_delta = 0.0;
  bool halted = false;
  bool erase_no_op = false;
  std::optional<double> completed_cycle_net;
};

/// Applies the policy's chosen action. A violated precondition leaves the
/// machine untouched and is reported in the outcome. `place` is called only
/// for a legal partition insertion and returns the trapped side.
template <class Place>
StepOutcome step(Machine& m, const Policy& policy, Place&& place) {
  const Transition t = policy.decide(m.demon.pc, m.demon.record);
  StepOutcome out;
  out.action = t.action;
  out.side = m.world.particle_side;
  switch (t.action) {
    case Action::Halt:
      out.halted = true;
      return out;
    case Action::InsertPartition:
      if ((out.violation = check_insert(m.world)) != Violation::None) return out;
      m.world = insert_partition(std::move(m.world), static_cast<Side>(place()));
      out.side = m.world.particle_side;
      if (!m.in_cycle) {
        m.in_cycle = true;
        m.cycle_extracted = m.cycle_paid = 0.0;
      }
      break;
    case Action::Measure: {
      if ((out.violation = check_measure(m.world, m.demon)) != Violation::None) return out;
      auto [w, d] = measure(std::move(m.world), std::move(m.demon));
      m.world = std::move(w);
      m.demon = std::move(d);
      break;
    }
    case Action::UndoMeasure: {
      if ((out.violation = check_undo(m.world, m.demon)) != Violation::None) return out;
      auto [w, d] = undo_measurement(std::move(m.world), std::move(m.demon));
      m.world = std::move(w);
      m.demon = std::move(d);
      break;
    }
    case Action::Expand: {
      if ((out.violation = check_expand(m.world, m.demon)) != Violation::None) return out;
      Expansion e = isothermal_expansion(std::move(m.world), m.demon);
      m.world = std::move(e.world);
      out.work = e.work;
      m.ledger.extracted += e.work;
      m.cycle_extracted += e.work;
      break;
    }
    case Action::ExtractPartition: {
      if ((out.violation = check_extract(m.world)) != Violation::None) return out;
      const double before = m.world.gas_entropy_offset;
      m.world = extract_partition(std::move(m.world));
      out.gas_entropy_delta = m.world.gas_entropy_offset - before;
      break;
    }
    case Action::Erase: {
      const double paid = m.ledger.erasure_paid;
      Erasure e = erase(std::move(m.demon), m.ledger);
      m.demon = std::move(e.memory);
      m.ledger = e.ledger;
      out.erase_no_op = e.no_op;
      out.erased = static_cast<std::uint64_t>(m.ledger.erasure_paid - paid);
      m.cycle_paid += m.ledger.erasure_paid - paid;
      // Whatever the register said about the particle is gone.
      m.world.correlated = false;
      break;
    }
    case Action::StoreRecord:
      if ((out.violation = check_store(m.world, m.demon)) != Violation::None) return out;
      m.demon = store_record(m.world, std::move(m.demon));
      break;
  }
  m.demon.pc = t.next;
  m.ledger.erasure_debt = m.demon.occupied_bits();
  if (m.in_cycle && !m.world.partition_in && m.demon.record == Register::Blank) {
    m.in_cycle = false;
    ++m.ledger.cycles;
    out.completed_cycle_net = m.cycle_extracted - m.cycle_paid;
  }
  return out;
}

/// Welford accumulator; merge() combines disjoint sample sets.
struct RunningStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.count) / n;
    m2 += o.m2 + d * d * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
  }

  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  /// Sample standard deviation over sqrt(count).
  double std_error() const { return count > 0 ? stddev() / std::sqrt(static_cast<double>(count)) : 0.0; }
};

enum class Termination { CompletedCycles, Livelock, Halted, ProtocolError, BudgetExhausted };

constexpr std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::CompletedCycles: return "completed-cycles";
    case Termination::Livelock: return "livelock";
    case Termination::Halted: return "halted";
    case Termination::ProtocolError: return "protocol-error";
    case Termination::BudgetExhausted: return "budget-exhausted";
  }
  return "?";
}

/// A configuration seen twice with no random event in between: from here the
/// machine repeats the same `period` steps forever.
struct LivelockWitness {
  ControlState pc = 0;
  Register record = Register::Blank;
  EngineWorld world;
  std::uint64_t first_step = 0;
  std::uint64_t repeat_step = 0;

  std::uint64_t period() const { return repeat_step - first_step; }
};

struct RunOptions {
  std::uint64_t max_steps = 1'000'000;
  std::uint64_t target_cycles = 0;  // 0 = run until something else stops it
  std::optional<Side> forced_side;
  std::uint64_t stream = 0;
  bool detect_livelock = true;
  bool trace = false;
};

struct RunReport {
  WorkLedger ledger;
  std::uint64_t steps = 0;
  Termination termination = Termination::BudgetExhausted;
  std::optional<LivelockWitness> livelock_witness;
  Violation violation = Violation::None;
  double gas_entropy = 0.0;
  RunningStats cycle_net;
  std::uint64_t left_insertions = 0;
  std::uint64_t insertions = 0;
  DemonState memory;
  std::vector<TraceRecord> trace;
};

namespace detail {

inline std::uint64_t configuration_key(const Machine& m) {
  return (static_cast<std::uint64_t>(m.demon.pc) << 8) | (static_cast<std::uint64_t>(m.demon.record) << 4) |
         (static_cast<std::uint64_t>(m.world.particle_side) << 2) | (m.world.partition_in ? 2u : 0u) |
         (m.world.correlated ? 1u : 0u);
}

}  // namespace detail

/// Runs a policy from a blank machine. The trapped side of each insertion is
/// drawn from the stream (seed, options.stream) unless options.forced_side is set.
inline RunReport run_policy(const Policy& policy, const EngineGeometry& g, std::uint64_t seed,
                            const RunOptions& options = {}) {
  Machine m(g, policy.initial());
  StreamRng rng(seed, options.stream);
  RunReport rep;
  // Configurations seen since the last random event, with the step count at
  // which each was reached.
  std::unordered_map<std::uint64_t, std::uint64_t> seen;
  auto place = [&] {
    if (options.forced_side) return *options.forced_side;
    return rng.uniform01() < g.ratio() ? Side::Left : Side::Right;
  };

  for (;;) {
    if (options.target_cycles > 0 && m.ledger.cycles >= options.target_cycles) {
      rep.termination = Termination::CompletedCycles;
      break;
    }
    if (rep.steps >= options.max_steps) {
      rep.termination = Termination::BudgetExhausted;
      break;
    }
    if (options.detect_livelock) {
      const auto [it, fresh] = seen.emplace(detail::configuration_key(m), rep.steps);
      if (!fresh) {
        rep.termination = Termination::Livelock;
        rep.livelock_witness = LivelockWitness{m.demon.pc, m.demon.record, m.world, it->second, rep.steps};
        break;
      }
    }
    const StepOutcome o = step(m, policy, place);
    if (o.halted) {
      rep.termination = Termination::Halted;
      break;
    }
    if (o.violation != Violation::None) {
      rep.termination = Termination::ProtocolError;
      rep.violation = o.violation;
      if (options.trace) {
        TraceRecord t;
        t.cycle = m.ledger.cycles;
        t.step = rep.steps + 1;
        t.op = std::string(to_string(o.action));
        t.side = o.side;
        t.record = m.demon.record;
        t.violation = std::string(to_string(o.violation));
        t.gas_entropy_offset = m.world.gas_entropy_offset;
        t.memory_bits = m.demon.occupied_bits();
        rep.trace.push_back(std::move(t));
      }
      break;
    }
    ++rep.steps;
    if (o.action == Action::InsertPartition) {
      seen.clear();
      ++rep.insertions;
      if (o.side == Side::Left) ++rep.left_insertions;
    }
    if (options.trace) {
      TraceRecord t;
      t.cycle = o.completed_cycle_net ? m.ledger.cycles - 1 : m.ledger.cycles;
      t.step = rep.steps;
      t.op = std::string(to_string(o.action));
      t.side = o.side;
      t.record = m.demon.record;
      t.work = o.work;
      t.erased = o.erased;
      t.gas_entropy_delta = o.gas_entropy_delta;
      t.gas_entropy_offset = m.world.gas_entropy_offset;
      t.memory_bits = m.demon.occupied_bits();
      rep.trace.push_back(std::move(t));
    }
    if (o.completed_cycle_net) rep.cycle_net.add(*o.completed_cycle_net);
  }
  rep.ledger = m.ledger;
  rep.gas_entropy = m.world.gas_entropy_offset;
  rep.memory = std::move(m.demon);
  return rep;
}

inline RunOptions cycle_options(std::uint64_t cycles) {
  if (cycles == 0) throw InvalidInput("cycles must be at least 1");
  RunOptions o;
  o.target_cycles = cycles;
  o.max_steps = 8 * cycles + 16;
  return o;
}

/// Insert, measure, expand, erase one bit; repeated for `cycles` cycles.
inline RunReport run_standard_demon(const EngineGeometry& g, std::uint64_t cycles, std::uint64_t seed) {
  return run_policy(preset("standard"), g, seed, cycle_options(cycles));
}

/// Completes profitable cycles, reverses unprofitable measurements.
inline RunReport run_demon_of_choice_undo_first(const EngineGeometry& g, std::uint64_t max_steps, std::uint64_t seed,
                                                std::optional<Side> forced_side = std::nullopt) {
  RunOptions o;
  o.max_steps = max_steps;
  o.forced_side = forced_side;
  return run_policy(preset("choice-undo-first"), g, seed, o);
}

/// Completes profitable cycles, abandons unprofitable ones by pulling the
/// partition, then erases.
inline RunReport run_demon_of_choice_extract_first(const EngineGeometry& g, std::uint64_t cycles, std::uint64_t seed) {
  return run_policy(preset("choice-extract-first"), g, seed, cycle_options(cycles));
}

struct DelayedErasureReport {
  RunReport run;  // ledger includes the final erasure
  std::uint64_t n = 0;
  std::uint64_t ones = 0;
  std::uint64_t k_estimate = 0;
  double extracted_per_cycle = 0.0;
  double net_per_cycle = 0.0;
  double realized_entropy = 0.0;  // h(ones / n)
};

/// N cycles whose records go to the tape; the tape is then compressed and
/// erased at the cost of its codeword.
inline DelayedErasureReport run_delayed_erasure_demon(const EngineGeometry& g, std::uint64_t n, std::uint64_t seed) {
  DelayedErasureReport out;
  out.run = run_policy(preset("delayed-erasure"), g, seed, cycle_options(n));
  RunReport& r = out.run;
  if (r.termination != Termination::CompletedCycles) throw std::logic_error("delayed-erasure preset stopped early");
  out.n = r.memory.tape.size();
  out.ones = r.memory.tape.ones();
  out.k_estimate = coding::k_estimate(r.memory.tape);
  out.realized_entropy = info::binary_entropy(static_cast<double>(out.ones) / static_cast<double>(out.n));
  DemonState packed = compress_tape(std::move(r.memory));
  if (packed.compressed->length() != out.k_estimate) throw std::logic_error("codeword length disagrees with k_estimate");
  Erasure e = erase(std::move(packed), r.ledger);
  r.memory = std::move(e.memory);
  r.ledger = e.ledger;
  out.extracted_per_cycle = r.ledger.extracted / static_cast<double>(out.n);
  out.net_per_cycle = r.ledger.net() / static_cast<double>(out.n);
  return out;
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j{{"termination", to_string(r.termination)},
                   {"steps", r.steps},
                   {"ledger", r.ledger},
                   {"gas_entropy", r.gas_entropy},
                   {"insertions", r.insertions},
                   {"left_insertions", r.left_insertions},
                   {"cycle_net_mean", r.cycle_net.mean},
                   {"cycle_net_stderr", r.cycle_net.std_error()}};
  if (r.violation != Violation::None) j["violation"] = to_string(r.violation);
  if (r.livelock_witness) {
    const LivelockWitness& w = *r.livelock_witness;
    j["livelock_witness"] = {{"pc", w.pc},
                             {"register", to_string(w.record)},
                             {"particle_side", to_string(w.world.particle_side)},
                             {"partition_in", w.world.partition_in},
                             {"correlated", w.world.correlated},
                             {"first_step", w.first_step},
                             {"repeat_step", w.repeat_step},
                             {"period", w.period()}};
  }
  return j;
}

}  // namespace demonlab
