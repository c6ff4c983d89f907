#include <cmath>
#include <type_traits>

#include <gtest/gtest.h>

#include "demonlab/demon.hpp"

using namespace demonlab;

namespace {

double lg(double x) { return std::log(x) / std::log(2.0); }
double gabor_mean(double p) { return -(1.0 + p * lg(p) + (1.0 - p) * lg(1.0 - p)); }
double h(double p) { return p <= 0 || p >= 1 ? 0.0 : -(p * lg(p) + (1 - p) * lg(1 - p)); }

Policy single_row(Transition blank, Transition left, Transition right) {
  return Policy("t", {"s"}, {Policy::Row{blank, left, right}}, 0);
}

auto always(Side s) {
  return [s] { return s; };
}

// Insert, measure, expand, store; never erases, never halts.
Policy hoarder() {
  std::vector<Policy::Row> t(3);
  t[0] = {Transition{Action::InsertPartition, 1}, Transition{Action::Halt, 0}, Transition{Action::Halt, 0}};
  t[1] = {Transition{Action::Measure, 1}, Transition{Action::Expand, 2}, Transition{Action::Expand, 2}};
  t[2] = {Transition{Action::Halt, 2}, Transition{Action::StoreRecord, 0}, Transition{Action::StoreRecord, 0}};
  return Policy("hoarder", {"a", "b", "c"}, t, 0);
}

}  // namespace

// The decision input is the control state and the register, nothing else.
static_assert(std::is_invocable_r_v<const Transition&, decltype(&Policy::decide), const Policy&, ControlState, Register>);
static_assert(!std::is_invocable_v<decltype(&Policy::decide), const Policy&, ControlState, Side>);
static_assert(!std::is_invocable_v<decltype(&Policy::decide), const Policy&, EngineWorld>);

TEST(PolicyTest, Validation) {
  EXPECT_THROW(Policy("x", {}, {}, 0), InvalidInput);
  EXPECT_THROW(Policy("x", {"a"}, {}, 0), InvalidInput);
  EXPECT_THROW(Policy("x", {"a"}, {Policy::Row{Transition{Action::Halt, 1}, {}, {}}}, 0), InvalidInput);
  EXPECT_THROW(Policy("x", {"a"}, {Policy::Row{}}, 1), InvalidInput);
  EXPECT_THROW(preset("nope"), InvalidInput);
}

TEST(PolicyTest, JsonRoundTrip) {
  for (const auto& name : preset_names()) {
    const Policy p = preset(name);
    EXPECT_EQ(policy_from_json(policy_to_json(p)), p) << name;
  }
  EXPECT_EQ(policy_from_json(policy_to_json(hoarder())), hoarder());
}

TEST(PolicyTest, JsonRejectsPartialOrDuplicate) {
  auto j = policy_to_json(preset("standard"));
  auto partial = j;
  partial["transitions"].erase(partial["transitions"].begin());
  EXPECT_THROW(policy_from_json(partial), InvalidInput);
  auto dup = j;
  dup["transitions"].push_back(j["transitions"][0]);
  EXPECT_THROW(policy_from_json(dup), InvalidInput);
  auto bad_action = j;
  bad_action["transitions"][0]["action"] = "teleport";
  EXPECT_THROW(policy_from_json(bad_action), InvalidInput);
  auto bad_state = j;
  bad_state["transitions"][0]["next"] = "nowhere";
  EXPECT_THROW(policy_from_json(bad_state), InvalidInput);
  EXPECT_THROW(policy_from_json(nlohmann::json::object()), InvalidInput);
}

TEST(Step, InsertDispatch) {
  const Policy p = single_row({Action::InsertPartition, 0}, {}, {});
  Machine m(EngineGeometry::from_ratio(0.25), 0);
  const StepOutcome o = step(m, p, always(Side::Left));
  EXPECT_EQ(o.violation, Violation::None);
  EXPECT_TRUE(m.world.partition_in);
  EXPECT_EQ(m.world.particle_side, Side::Left);
}

TEST(Step, MeasureFillsRegister) {
  const Policy p = single_row({Action::Measure, 0}, {}, {});
  Machine m(EngineGeometry::from_ratio(0.25), 0);
  m.world = insert_partition(m.world, Side::Right);
  step(m, p, always(Side::Left));
  EXPECT_EQ(m.demon.record, Register::Right);
  EXPECT_EQ(m.ledger.erasure_debt, 1u);
}

TEST(Step, UndoAfterExtractIsRejected) {
  const Policy p = single_row({}, {Action::UndoMeasure, 0}, {Action::UndoMeasure, 0});
  Machine m(EngineGeometry::from_ratio(0.25), 0);
  auto [w, d] = measure(insert_partition(m.world, Side::Right), m.demon);
  m.world = extract_partition(w);
  m.demon = d;
  const EngineWorld before = m.world;
  const StepOutcome o = step(m, p, always(Side::Left));
  EXPECT_EQ(o.violation, Violation::CorrelationLost);
  EXPECT_EQ(m.world, before);
  EXPECT_EQ(m.demon.record, Register::Right);

  const RunReport r = run_policy(p, EngineGeometry::from_ratio(0.25), 1);
  EXPECT_EQ(r.termination, Termination::Halted);
}

TEST(Step, ErasingCutsTheCorrelation) {
  const Policy p = single_row({}, {Action::Erase, 0}, {Action::Erase, 0});
  Machine m(EngineGeometry::from_ratio(0.25), 0);
  auto [w, d] = measure(insert_partition(m.world, Side::Left), m.demon);
  m.world = w;
  m.demon = d;
  const StepOutcome o = step(m, p, always(Side::Left));
  EXPECT_EQ(o.erased, 1u);
  EXPECT_FALSE(m.world.correlated);
  EXPECT_TRUE(m.demon.blank());
}

TEST(StandardDemon, MatchesClosedForm) {
  for (double p : {0.5, 0.25, 0.125}) {
    const RunReport r = run_standard_demon(EngineGeometry::from_ratio(p), 100000, 2024);
    ASSERT_EQ(r.termination, Termination::CompletedCycles);
    EXPECT_EQ(r.ledger.cycles, 100000u);
    EXPECT_EQ(r.cycle_net.count, 100000u);
    EXPECT_NEAR(r.cycle_net.mean, gabor_mean(p), std::max(3.0 * r.cycle_net.std_error(), 1e-12));
    EXPECT_NEAR(r.cycle_net.mean, gabor_mean(p), 0.01);
  }
}

TEST(StandardDemon, LedgerAddsUp) {
  const RunReport r = run_standard_demon(EngineGeometry::from_ratio(0.3), 5000, 5);
  EXPECT_DOUBLE_EQ(r.ledger.erasure_paid, 5000.0);
  EXPECT_NEAR(r.ledger.net(), r.cycle_net.mean * 5000.0, 1e-8);
  EXPECT_EQ(r.ledger.erasure_debt, 0u);
  EXPECT_EQ(r.insertions, 5000u);
  const double left = static_cast<double>(r.left_insertions);
  EXPECT_NEAR(r.ledger.extracted, left * lg(1 / 0.3) + (5000.0 - left) * lg(1 / 0.7), 1e-8);
  EXPECT_EQ(r.gas_entropy, 0.0);
}

TEST(StandardDemon, Reproducible) {
  const auto g = EngineGeometry::from_ratio(0.25);
  const RunReport a = run_standard_demon(g, 1000, 77), b = run_standard_demon(g, 1000, 77),
                  c = run_standard_demon(g, 1000, 78);
  EXPECT_EQ(a.ledger, b.ledger);
  EXPECT_NE(a.ledger, c.ledger);
}

TEST(StandardDemon, TraceFollowsTheCycle) {
  RunOptions o = cycle_options(2);
  o.trace = true;
  const RunReport r = run_policy(preset("standard"), EngineGeometry::from_ratio(0.25), 1, o);
  ASSERT_EQ(r.trace.size(), 8u);
  const char* ops[] = {"insert_partition", "measure", "expand", "erase"};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(r.trace[i].op, ops[i % 4]);
  EXPECT_EQ(r.trace[3].erased, 1u);
  EXPECT_EQ(r.trace[3].cycle, 0u);
  EXPECT_EQ(r.trace[4].cycle, 1u);
}

TEST(UndoFirst, LivelocksOnTheUnprofitableSide) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RunReport r = run_demon_of_choice_undo_first(EngineGeometry::from_ratio(0.25), 4, seed, Side::Right);
    ASSERT_EQ(r.termination, Termination::Livelock);
    ASSERT_TRUE(r.livelock_witness);
    EXPECT_EQ(r.livelock_witness->period(), 2u);
    EXPECT_LE(r.livelock_witness->repeat_step, 4u);
    EXPECT_EQ(r.livelock_witness->record, Register::Blank);
    EXPECT_TRUE(r.livelock_witness->world.partition_in);
    EXPECT_EQ(r.ledger.net(), 0.0);
  }
}

TEST(UndoFirst, BudgetBeforeWitness) {
  const RunReport r = run_demon_of_choice_undo_first(EngineGeometry::from_ratio(0.25), 3, 1, Side::Right);
  EXPECT_EQ(r.termination, Termination::BudgetExhausted);
  EXPECT_FALSE(r.livelock_witness);
}

TEST(UndoFirst, ProfitableSideCompletes) {
  const RunReport r = run_demon_of_choice_undo_first(EngineGeometry::from_ratio(0.25), 4, 1, Side::Left);
  EXPECT_EQ(r.ledger.cycles, 1u);
  EXPECT_DOUBLE_EQ(r.ledger.net(), 1.0);
}

TEST(UndoFirst, RandomSidesEventuallyLivelock) {
  // Without forcing, the first Right trap freezes the demon; the Left cycles
  // before it are the only ones ever completed.
  const RunReport r = run_demon_of_choice_undo_first(EngineGeometry::from_ratio(0.25), 100000, 3);
  EXPECT_EQ(r.termination, Termination::Livelock);
  EXPECT_EQ(r.ledger.net(), static_cast<double>(r.ledger.cycles));
}

TEST(ExtractFirst, BranchAccounting) {
  for (double p : {0.25, 0.5}) {
    const RunReport r = run_demon_of_choice_extract_first(EngineGeometry::from_ratio(p), 100000, 11);
    ASSERT_EQ(r.termination, Termination::CompletedCycles);
    const double oracle = p * (lg(1 / p) - 1.0) + (1 - p) * (-1.0);
    EXPECT_NEAR(r.cycle_net.mean, oracle, 0.01);
    EXPECT_NEAR(r.cycle_net.mean, -0.5, 0.01);
  }
  const RunReport q = run_demon_of_choice_extract_first(EngineGeometry::from_ratio(0.25), 100000, 11);
  EXPECT_LT(q.cycle_net.mean, gabor_mean(0.25));
  EXPECT_GT(q.gas_entropy, 0.0);
}

TEST(Delayed, BreakEvenOnAverage) {
  for (double p : {0.25, 0.5}) {
    RunningStats s;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DelayedErasureReport d = run_delayed_erasure_demon(EngineGeometry::from_ratio(p), 10000, seed);
      EXPECT_EQ(d.n, 10000u);
      EXPECT_EQ(d.run.ledger.erasure_debt, 0u);
      EXPECT_DOUBLE_EQ(d.run.ledger.erasure_paid, static_cast<double>(d.k_estimate));
      const double slack = (lg(10001.0) + 2.0) / 10000.0;
      const double realized = h(static_cast<double>(d.ones) / 10000.0);
      EXPECT_LE(static_cast<double>(d.k_estimate) / 10000.0, realized + slack);
      EXPECT_GE(static_cast<double>(d.k_estimate) / 10000.0, realized - slack);
      s.add(d.net_per_cycle);
    }
    EXPECT_GE(s.mean, -0.005) << p;
    EXPECT_LE(s.mean, 0.0) << p;
  }
}

TEST(Delayed, SingleCycleLosesOnAverage) {
  // A one-bit tape codes to exactly one bit, so N = 1 is the standard demon:
  // a Left run nets +1, the average is the closed form.
  RunningStats s;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    const DelayedErasureReport d = run_delayed_erasure_demon(EngineGeometry::from_ratio(0.25), 1, seed);
    EXPECT_EQ(d.k_estimate, 1u);
    s.add(d.net_per_cycle);
  }
  EXPECT_LT(s.mean, 0.0);
  EXPECT_NEAR(s.mean, gabor_mean(0.25), 3.0 * s.std_error());
}

TEST(Hoarding, DebtGrowsWithEveryCycle) {
  const auto g = EngineGeometry::from_ratio(0.25);
  RunOptions o = cycle_options(1000);
  const RunReport r = run_policy(hoarder(), g, 4, o);
  ASSERT_EQ(r.termination, Termination::CompletedCycles);
  EXPECT_EQ(r.ledger.erasure_debt, 1000u);
  EXPECT_DOUBLE_EQ(r.ledger.erasure_paid, 0.0);
  EXPECT_GT(r.ledger.net(), 0.0);
  EXPECT_LT(r.ledger.charged_net(), 0.0);
}

TEST(Stats, MergeMatchesSinglePass) {
  RunningStats all, a, b;
  for (int i = 0; i < 100; ++i) {
    const double x = std::sin(i * 0.7) * 3.0 + i * 0.01;
    all.add(x);
    (i < 37 ? a : b).add(x);
  }
  a.merge(b);
  EXPECT_EQ(a.count, all.count);
  EXPECT_NEAR(a.mean, all.mean, 1e-12);
  EXPECT_NEAR(a.variance(), all.variance(), 1e-10);
}

TEST(Report, JsonCarriesWitness) {
  const RunReport r = run_demon_of_choice_undo_first(EngineGeometry::from_ratio(0.25), 4, 1, Side::Right);
  const auto j = report_to_json(r);
  EXPECT_EQ(j["termination"], "livelock");
  EXPECT_EQ(j["livelock_witness"]["period"], 2);
}
