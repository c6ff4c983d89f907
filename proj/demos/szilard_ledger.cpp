// Walks one engine through a cycle by hand and prints the books after each
// transition, then compares the three demons over many cycles.

#include <cstdio>

#include "demonlab/demon.hpp"

int main() {
  using namespace demonlab;
  const EngineGeometry g(4.0, 1.0);
  EngineWorld w(g);
  DemonState mem;
  WorkLedger books;

  w = insert_partition(w, Side::Right);
  std::tie(w, mem) = measure(w, mem);
  std::printf("measured: register=%s correlated=%d\n", std::string(to_string(mem.record)).c_str(), w.correlated);

  std::tie(w, mem) = undo_measurement(w, mem);
  std::printf("undone:   register=%s, particle still %s\n", std::string(to_string(mem.record)).c_str(),
              std::string(to_string(w.particle_side)).c_str());

  std::tie(w, mem) = measure(w, mem);
  Expansion e = isothermal_expansion(w, mem);
  w = e.world;
  books.extracted += e.work;
  Erasure er = erase(mem, books);
  books = er.ledger;
  std::printf("cycle:    work %.6f, erased %.0f bit, net %.6f (expected per cycle %.6f)\n", e.work,
              books.erasure_paid, books.net(), expected_cycle_work(g));

  for (const char* name : {"standard", "choice-extract-first"}) {
    const RunReport r = run_policy(preset(name), g, 42, cycle_options(100000));
    std::printf("%-22s mean net %.6f +- %.6f over %llu cycles\n", name, r.cycle_net.mean, r.cycle_net.std_error(),
                static_cast<unsigned long long>(r.ledger.cycles));
  }
  const RunReport u = run_demon_of_choice_undo_first(g, 100, 42, Side::Right);
  std::printf("%-22s %s after %llu steps, period %llu\n", "choice-undo-first",
              std::string(to_string(u.termination)).c_str(), static_cast<unsigned long long>(u.steps),
              static_cast<unsigned long long>(u.livelock_witness->period()));
}
