#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace demonlab {

/// Thrown when a caller hands over a value that violates a type invariant.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by the decoder for payloads no tape could have produced.
class CorruptCodeword : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Violation {
  None,
  PartitionAlreadyIn,
  PartitionAbsent,
  MemoryOccupied,      // measuring into a register that still holds a record
  MemoryBlank,         // storing from an empty register
  CorrelationLost,     // undo after the record stopped describing the particle
  UncorrelatedExpansion,
  RecordInUse,         // storing a record that still drives the piston
};

constexpr std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::None: return "none";
    case Violation::PartitionAlreadyIn: return "partition-already-in";
    case Violation::PartitionAbsent: return "partition-absent";
    case Violation::MemoryOccupied: return "memory-occupied";
    case Violation::MemoryBlank: return "memory-blank";
    case Violation::CorrelationLost: return "correlation-lost";
    case Violation::UncorrelatedExpansion: return "uncorrelated-expansion";
    case Violation::RecordInUse: return "record-in-use";
  }
  return "unknown";
}

/// An engine transition was attempted outside its precondition.
class ProtocolError : public std::logic_error {
 public:
  explicit ProtocolError(Violation v)
      : std::logic_error("protocol violation: " + std::string(to_string(v))), code_(v) {}

  Violation code() const noexcept { return code_; }

 private:
  Violation code_;
};

}  // namespace demonlab
