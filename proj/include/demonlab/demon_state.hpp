#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "demonlab/coding.hpp"

namespace demonlab {

enum class Side : std::uint8_t { Anywhere, Left, Right };

/// Content of the demon's one-outcome register.
enum class Register : std::uint8_t { Blank, Left, Right };

using ControlState = std::uint32_t;

constexpr std::string_view to_string(Side s) {
  switch (s) {
    case Side::Anywhere: return "anywhere";
    case Side::Left: return "left";
    case Side::Right: return "right";
  }
  return "?";
}

constexpr std::string_view to_string(Register r) {
  switch (r) {
    case Register::Blank: return "blank";
    case Register::Left: return "left";
    case Register::Right: return "right";
  }
  return "?";
}

constexpr Register record_of(Side s) {
  return s == Side::Left ? Register::Left : s == Side::Right ? Register::Right : Register::Blank;
}

/// The demon's memory: a register, an outcome tape (only used when erasure is
/// postponed), an optional compressed form of that tape, and the control
/// state of the policy that drives it.
struct DemonState {
  Register record = Register::Blank;
  coding::RecordTape tape;
  std::optional<coding::Codeword> compressed;
  ControlState pc = 0;

  /// Bits that still have to be erased before the memory is blank again.
  std::uint64_t occupied_bits() const {
    std::uint64_t n = record == Register::Blank ? 0 : 1;
    n += tape.size();
    if (compressed) n += compressed->length();
    return n;
  }

  bool blank() const { return occupied_bits() == 0; }

  friend bool operator==(const DemonState&, const DemonState&) = default;
};

}  // namespace demonlab
