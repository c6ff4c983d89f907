#pragma once

// Single-particle engine: a box of length L, a partition that cuts off a
// compartment of length ell, a piston driven by the demon's record, and an
// eraser. Work is in kT-bits (k_B T ln 2), entropy in bits.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <json.hpp>

#include "demonlab/demon_state.hpp"
#include "demonlab/errors.hpp"
#include "demonlab/info_theory.hpp"

namespace demonlab {

class EngineGeometry {
 public:
  EngineGeometry(double L, double ell) : L_(L), ell_(ell) {
    if (!(L > 0.0) || !(ell > 0.0) || !(ell < L) || !std::isfinite(L)) throw InvalidInput("geometry needs 0 < ell < L");
  }

  static EngineGeometry from_ratio(double ell_over_L) { return EngineGeometry(1.0, ell_over_L); }

  double L() const noexcept { return L_; }
  double ell() const noexcept { return ell_; }
  /// Probability that the partition traps the particle on the left.
  double ratio() const noexcept { return ell_ / L_; }

  double width(Side s) const {
    if (s == Side::Left) return ell_;
    if (s == Side::Right) return L_ - ell_;
    return L_;
  }

  friend bool operator==(const EngineGeometry&, const EngineGeometry&) = default;

 private:
  double L_, ell_;
};

struct EngineWorld {
  EngineGeometry geometry;
  Side particle_side = Side::Anywhere;
  bool partition_in = false;
  bool correlated = false;
  double gas_entropy_offset = 0.0;  // accumulated free-expansion entropy

  explicit EngineWorld(EngineGeometry g) : geometry(g) {}

  friend bool operator==(const EngineWorld&, const EngineWorld&) = default;
};

struct WorkLedger {
  double extracted = 0.0;
  double erasure_paid = 0.0;
  std::uint64_t erasure_debt = 0;
  std::uint64_t cycles = 0;

  double net() const noexcept { return extracted - erasure_paid; }
  /// Net work if the outstanding memory were erased now.
  double charged_net() const noexcept { return net() - static_cast<double>(erasure_debt); }

  WorkLedger& operator+=(const WorkLedger& o) noexcept {
    extracted += o.extracted;
    erasure_paid += o.erasure_paid;
    erasure_debt += o.erasure_debt;
    cycles += o.cycles;
    return *this;
  }
  friend WorkLedger operator+(WorkLedger a, const WorkLedger& b) noexcept { return a += b; }
  friend bool operator==(const WorkLedger&, const WorkLedger&) = default;
};

// Preconditions, shared by the throwing transitions and by policy runners
// that need to know in advance whether a step is legal.

inline Violation check_insert(const EngineWorld& w) {
  return w.partition_in ? Violation::PartitionAlreadyIn : Violation::None;
}

inline Violation check_measure(const EngineWorld& w, const DemonState& m) {
  if (!w.partition_in) return Violation::PartitionAbsent;
  if (m.record != Register::Blank) return Violation::MemoryOccupied;
  return Violation::None;
}

inline Violation check_undo(const EngineWorld& w, const DemonState& m) {
  if (!w.correlated || m.record == Register::Blank) return Violation::CorrelationLost;
  return Violation::None;
}

inline Violation check_expand(const EngineWorld& w, const DemonState& m) {
  if (!w.partition_in) return Violation::PartitionAbsent;
  if (!w.correlated || m.record != record_of(w.particle_side)) return Violation::UncorrelatedExpansion;
  return Violation::None;
}

inline Violation check_extract(const EngineWorld& w) {
  return w.partition_in ? Violation::None : Violation::PartitionAbsent;
}

inline Violation check_store(const EngineWorld& w, const DemonState& m) {
  if (m.record == Register::Blank) return Violation::MemoryBlank;
  if (w.correlated) return Violation::RecordInUse;
  return Violation::None;
}

namespace detail {
inline void require(Violation v) {
  if (v != Violation::None) throw ProtocolError(v);
}
}  // namespace detail

/// Drops the partition with the particle on a known side.
inline EngineWorld insert_partition(EngineWorld w, Side side) {
  detail::require(check_insert(w));
  if (side == Side::Anywhere) throw InvalidInput("inserted partition must trap the particle on one side");
  w.partition_in = true;
  w.particle_side = side;
  w.correlated = false;
  return w;
}

/// Drops the partition; the particle is caught on the left with probability ell/L.
template <class Rng>
EngineWorld insert_partition(EngineWorld w, Rng& rng) {
  detail::require(check_insert(w));
  const Side side = rng.uniform01() < w.geometry.ratio() ? Side::Left : Side::Right;
  return insert_partition(std::move(w), side);
}

/// Copies the particle's side into the blank register.
inline std::pair<EngineWorld, DemonState> measure(EngineWorld w, DemonState m) {
  detail::require(check_measure(w, m));
  m.record = record_of(w.particle_side);
  w.correlated = true;
  return {std::move(w), std::move(m)};
}

/// The same coupling applied again; clears the register.
inline std::pair<EngineWorld, DemonState> undo_measurement(EngineWorld w, DemonState m) {
  detail::require(check_undo(w, m));
  m.record = Register::Blank;
  w.correlated = false;
  return {std::move(w), std::move(m)};
}

struct Expansion {
  EngineWorld world;
  double work = 0.0;
};

/// Quasi-static expansion of the occupied compartment to the full box,
/// steered by the record. The record stays in memory.
inline Expansion isothermal_expansion(EngineWorld w, const DemonState& m) {
  detail::require(check_expand(w, m));
  const double work = std::log2(w.geometry.L() / w.geometry.width(w.particle_side));
  w.partition_in = false;
  w.correlated = false;
  w.particle_side = Side::Anywhere;
  return {std::move(w), work};
}

/// Pulls the partition out with no piston attached: free expansion, no work.
inline EngineWorld extract_partition(EngineWorld w) {
  detail::require(check_extract(w));
  w.gas_entropy_offset += std::log2(w.geometry.L() / w.geometry.width(w.particle_side));
  w.partition_in = false;
  w.correlated = false;
  w.particle_side = Side::Anywhere;
  return w;
}

/// Moves a spent record from the register onto the tape (1 = left).
inline DemonState store_record(const EngineWorld& w, DemonState m) {
  detail::require(check_store(w, m));
  m.tape.push_back(m.record == Register::Left);
  m.record = Register::Blank;
  return m;
}

/// Replaces the raw tape by its enumerative codeword. Reversible, free.
inline DemonState compress_tape(DemonState m) {
  if (m.compressed) throw InvalidInput("tape already compressed");
  m.compressed = coding::enumerative_encode(m.tape);
  m.tape.clear();
  return m;
}

struct Erasure {
  DemonState memory;
  WorkLedger ledger;
  bool no_op = false;  // nothing to erase
};

/// Resets the whole memory at 1 kT-bit per erased bit. nbits must be 0
/// (leave memory alone) or the full occupied size.
inline Erasure erase(DemonState m, WorkLedger l, std::uint64_t nbits) {
  const std::uint64_t held = m.occupied_bits();
  if (nbits == 0 || held == 0) return {std::move(m), l, held == 0};
  if (nbits != held) throw InvalidInput("erasure must cover the whole occupied memory");
  m.record = Register::Blank;
  m.tape.clear();
  m.compressed.reset();
  l.erasure_paid += static_cast<double>(nbits);
  l.erasure_debt = 0;  // the whole memory is blank now
  return {std::move(m), l, false};
}

inline Erasure erase(DemonState m, WorkLedger l) {
  const std::uint64_t n = m.occupied_bits();
  return erase(std::move(m), l, n);
}

/// Measure, expand, erase one bit: the net gain for a given trapped side.
inline double net_cycle_work(const EngineGeometry& g, Side side) {
  if (side == Side::Anywhere) throw InvalidInput("net_cycle_work needs a side");
  return std::log2(g.L() / g.width(side)) - 1.0;
}

/// Mean of net_cycle_work over the trapping probabilities.
inline double expected_cycle_work(const EngineGeometry& g) {
  const double p = g.ratio(), q = 1.0 - p;
  return -(1.0 + p * std::log2(p) + q * std::log2(q));
}

/// Z = H + K.
inline double physical_entropy(double H, double K) {
  if (!(H >= 0.0) || !(K >= 0.0)) throw InvalidInput("physical_entropy needs non-negative H and K");
  return H + K;
}

/// Work obtainable from a change of physical entropy, in kT-bits.
inline double work_from_entropy_change(double delta_z) { return delta_z; }

/// Ensemble-averaged entropy bookkeeping of one measurement on the engine.
/// The record's information content can be counted as the fixed-width
/// register (one bit) or as the minimal ensemble code length h(ell/L).
struct MeasurementEntropyBalance {
  double delta_H = 0.0;           // drop in ignorance about the gas
  double delta_K_register = 0.0;  // bits written into the register
  double delta_K_minimal = 0.0;   // shortest average description of the outcome
  double delta_Z_register = 0.0;
  double delta_Z_minimal = 0.0;
};

inline MeasurementEntropyBalance measurement_entropy_balance(const EngineGeometry& g) {
  MeasurementEntropyBalance b;
  const double h = info::binary_entropy(g.ratio());
  b.delta_H = -h;
  b.delta_K_register = 1.0;
  b.delta_K_minimal = h;
  b.delta_Z_register = b.delta_H + b.delta_K_register;
  b.delta_Z_minimal = b.delta_H + b.delta_K_minimal;
  return b;
}

/// One line of the transition trace.
struct TraceRecord {
  std::uint64_t cycle = 0;
  std::uint64_t step = 0;
  std::string op;
  Side side = Side::Anywhere;
  Register record = Register::Blank;
  double work = 0.0;
  std::uint64_t erased = 0;
  double gas_entropy_delta = 0.0;
  double gas_entropy_offset = 0.0;
  std::uint64_t memory_bits = 0;
  std::string violation;
};

inline void to_json(nlohmann::json& j, const TraceRecord& t) {
  j = nlohmann::json{{"cycle", t.cycle},
                     {"step", t.step},
                     {"op", t.op},
                     {"side", to_string(t.side)},
                     {"register", to_string(t.record)},
                     {"work", t.work},
                     {"erased", t.erased},
                     {"gas_entropy_delta", t.gas_entropy_delta},
                     {"gas_entropy_offset", t.gas_entropy_offset},
                     {"memory_bits", t.memory_bits}};
  if (!t.violation.empty()) j["violation"] = t.violation;
}

inline void to_json(nlohmann::json& j, const WorkLedger& l) {
  j = nlohmann::json{{"extracted", l.extracted},
                     {"erasure_paid", l.erasure_paid},
                     {"erasure_debt", l.erasure_debt},
                     {"cycles", l.cycles},
                     {"net", l.net()},
                     {"charged_net", l.charged_net()}};
}

}  // namespace demonlab
