#pragma once

// Exhaustive search over small deterministic demons. Every policy is run for
// a fixed number of steps on the same per-seed sequence of trapped sides;
// memory still occupied at the end is charged at 1 kT-bit per bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "demonlab/demon.hpp"

namespace demonlab {

struct PolicySearchOptions {
  std::size_t max_control_states = 2;
  std::uint64_t horizon = 50;
  std::uint64_t seed_count = 1000;
  std::uint64_t seed = 1;
  std::uint64_t max_space = 1'000'000;
  unsigned threads = 1;
  std::size_t keep_top = 5;
};

struct PolicyScore {
  std::size_t control_states = 0;
  std::uint64_t index = 0;  // position in the enumeration for that state count
  double mean = 0.0;        // debt-charged net work per run
  double std_error = 0.0;
  Policy policy{"", {"s0"}, {Policy::Row{}}, 0};
};

struct PolicySearchReport {
  std::uint64_t space_size = 0;
  std::uint64_t evaluated = 0;     // policies that never violated a precondition
  std::uint64_t disqualified = 0;  // policies that hit a protocol error on some seed
  std::vector<PolicyScore> top;    // best first
  bool pass = false;               // best mean <= 3 standard errors
};

class PolicySpaceTooLarge : public InvalidInput {
 public:
  PolicySpaceTooLarge(double estimate, std::uint64_t limit)
      : InvalidInput("policy space of about " + std::to_string(static_cast<long double>(estimate)) +
                     " policies exceeds the limit of " + std::to_string(limit)),
        estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

namespace search {

// Actions that are legal for at least one world when the register is blank,
// resp. holds a record. Any other choice errors whenever it is reached, so it
// is either disqualified or indistinguishable from halting.
inline constexpr std::array<Action, 4> kBlankActions{Action::InsertPartition, Action::Measure,
                                                     Action::ExtractPartition, Action::Erase};
inline constexpr std::array<Action, 5> kHeldActions{Action::InsertPartition, Action::UndoMeasure, Action::Expand,
                                                    Action::ExtractPartition, Action::Erase};

inline std::uint64_t options_per_entry(std::size_t n, Register r) {
  return 1 + (r == Register::Blank ? kBlankActions.size() : kHeldActions.size()) * n;
}

/// Number of raw tables for n control states.
inline double raw_space(std::size_t n) {
  double s = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (Register r : {Register::Blank, Register::Left, Register::Right})
      s *= static_cast<double>(options_per_entry(n, r));
  return s;
}

inline Policy decode(std::uint64_t index, std::size_t n) {
  const std::string name = "search-" + std::to_string(n) + "-" + std::to_string(index);
  std::vector<Policy::Row> table(n);
  std::vector<std::string> names;
  for (std::size_t s = 0; s < n; ++s) {
    names.push_back("s" + std::to_string(s));
    for (Register r : {Register::Blank, Register::Left, Register::Right}) {
      const std::uint64_t radix = options_per_entry(n, r);
      const std::uint64_t digit = index % radix;
      index /= radix;
      Transition t{Action::Halt, static_cast<ControlState>(s)};
      if (digit > 0) {
        const std::uint64_t a = (digit - 1) / n;
        t.next = static_cast<ControlState>((digit - 1) % n);
        t.action = r == Register::Blank ? kBlankActions[a] : kHeldActions[a];
      }
      table[s][register_index(r)] = t;
    }
  }
  return Policy(name, std::move(names), std::move(table), 0);
}

/// Every control state reachable from the initial one. Policies with an
/// unreachable state behave like a policy with fewer states and are counted
/// there instead.
inline bool all_states_reachable(const Policy& p) {
  const std::size_t n = p.control_states();
  std::vector<bool> seen(n, false);
  std::vector<ControlState> stack{p.initial()};
  seen[p.initial()] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const ControlState s = stack.back();
    stack.pop_back();
    for (const Transition& t : p.table()[s])
      if (t.action != Action::Halt && !seen[t.next]) {
        seen[t.next] = true;
        ++count;
        stack.push_back(t.next);
      }
  }
  return count == n;
}

struct SideTrie {
  struct Node {
    std::int32_t child[2] = {-1, -1};  // left, right
    std::uint32_t count = 0;
  };
  std::vector<Node> nodes;
};

/// Seed s's k-th insertion uses the k-th draw of stream (seed, s), the same
/// draw run_policy would use with options.stream = s.
inline SideTrie build_side_trie(std::uint64_t seed, std::uint64_t seed_count, std::uint64_t depth, double ratio) {
  SideTrie t;
  t.nodes.emplace_back();
  for (std::uint64_t s = 0; s < seed_count; ++s) {
    StreamRng rng(seed, s);
    std::int32_t node = 0;
    ++t.nodes[0].count;
    for (std::uint64_t k = 0; k < depth; ++k) {
      const int side = rng.uniform01() < ratio ? 0 : 1;
      if (t.nodes[static_cast<std::size_t>(node)].child[side] < 0) {
        t.nodes[static_cast<std::size_t>(node)].child[side] = static_cast<std::int32_t>(t.nodes.size());
        t.nodes.emplace_back();
      }
      node = t.nodes[static_cast<std::size_t>(node)].child[side];
      ++t.nodes[static_cast<std::size_t>(node)].count;
    }
  }
  return t;
}

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  bool invalid = false;
};

// Seeds that share their insertion history share the run; the trie splits
// them at each insertion.
inline void explore(const Policy& p, const SideTrie& trie, std::int32_t node, Machine m, std::uint64_t t,
                    std::uint64_t horizon, Accumulator& acc) {
  auto no_draw = [] { return Side::Left; };
  while (t < horizon) {
    const Transition& tr = p.decide(m.demon.pc, m.demon.record);
    if (tr.action == Action::InsertPartition && check_insert(m.world) == Violation::None) {
      const auto& n = trie.nodes[static_cast<std::size_t>(node)];
      for (int side = 0; side < 2; ++side) {
        if (n.child[side] < 0) continue;
        Machine branch = m;
        step(branch, p, [side] { return side == 0 ? Side::Left : Side::Right; });
        explore(p, trie, n.child[side], std::move(branch), t + 1, horizon, acc);
        if (acc.invalid) return;
      }
      return;
    }
    const StepOutcome o = step(m, p, no_draw);
    if (o.violation != Violation::None) {
      acc.invalid = true;
      return;
    }
    if (o.halted) break;
    ++t;
  }
  const double v = m.ledger.charged_net();
  const double c = trie.nodes[static_cast<std::size_t>(node)].count;
  acc.sum += c * v;
  acc.sum_sq += c * v * v;
}

inline bool better(const PolicyScore& a, const PolicyScore& b) {
  if (a.mean != b.mean) return a.mean > b.mean;
  if (a.control_states != b.control_states) return a.control_states < b.control_states;
  return a.index < b.index;
}

}  // namespace search

/// Debt-charged net work of one policy over the common seeds; nullopt when
/// some seed drives it into a protocol violation.
inline std::optional<std::pair<double, double>> evaluate_policy(const Policy& p, const EngineGeometry& g,
                                                                const search::SideTrie& trie, std::uint64_t horizon) {
  search::Accumulator acc;
  search::explore(p, trie, 0, Machine(g, p.initial()), 0, horizon, acc);
  if (acc.invalid) return std::nullopt;
  const double n = trie.nodes[0].count;
  const double mean = acc.sum / n;
  const double var = n > 1 ? std::max(0.0, (acc.sum_sq - n * mean * mean) / (n - 1)) : 0.0;
  return std::make_pair(mean, std::sqrt(var / n));
}

inline PolicySearchReport enumerate_policies(const EngineGeometry& g, const PolicySearchOptions& opt) {
  if (opt.max_control_states == 0) throw InvalidInput("max_control_states must be at least 1");
  if (opt.seed_count == 0 || opt.horizon == 0) throw InvalidInput("horizon and seed_count must be positive");
  double raw = 0.0;
  for (std::size_t n = 1; n <= opt.max_control_states; ++n) raw += search::raw_space(n);
  // Counting the canonical policies exactly costs a pass over the raw space.
  if (raw > 50.0 * static_cast<double>(opt.max_space)) throw PolicySpaceTooLarge(raw, opt.max_space);

  struct Slice {
    std::uint64_t evaluated = 0, disqualified = 0, size = 0;
    std::vector<PolicyScore> top;
  };
  const search::SideTrie trie = search::build_side_trie(opt.seed, opt.seed_count, opt.horizon, g.ratio());
  const unsigned workers = std::max(1u, opt.threads);

  auto keep = [&](std::vector<PolicyScore>& top, PolicyScore s) {
    top.push_back(std::move(s));
    std::sort(top.begin(), top.end(), search::better);
    if (top.size() > opt.keep_top) top.pop_back();
  };

  // First pass counts the space so an oversized request fails before any
  // simulation runs.
  std::uint64_t space = 0;
  for (std::size_t n = 1; n <= opt.max_control_states; ++n) {
    const auto total = static_cast<std::uint64_t>(search::raw_space(n));
    for (std::uint64_t i = 0; i < total; ++i)
      if (n == 1 || search::all_states_reachable(search::decode(i, n))) ++space;
  }
  if (space > opt.max_space) throw PolicySpaceTooLarge(static_cast<double>(space), opt.max_space);

  std::vector<Slice> slices(workers);
  auto work = [&](unsigned w) {
    Slice& sl = slices[w];
    for (std::size_t n = 1; n <= opt.max_control_states; ++n) {
      const auto total = static_cast<std::uint64_t>(search::raw_space(n));
      for (std::uint64_t i = w; i < total; i += workers) {
        Policy p = search::decode(i, n);
        if (n > 1 && !search::all_states_reachable(p)) continue;
        ++sl.size;
        const auto r = evaluate_policy(p, g, trie, opt.horizon);
        if (!r) {
          ++sl.disqualified;
          continue;
        }
        ++sl.evaluated;
        if (sl.top.size() < opt.keep_top || r->first >= sl.top.back().mean)
          keep(sl.top, PolicyScore{n, i, r->first, r->second, std::move(p)});
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  PolicySearchReport rep;
  for (Slice& sl : slices) {
    rep.evaluated += sl.evaluated;
    rep.disqualified += sl.disqualified;
    rep.space_size += sl.size;
    for (PolicyScore& s : sl.top) keep(rep.top, std::move(s));
  }
  if (!rep.top.empty()) rep.pass = rep.top.front().mean <= 3.0 * rep.top.front().std_error + 1e-12;
  return rep;
}

}  // namespace demonlab
