#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdg/errors.hpp"

namespace mdg::x86 {

struct UnknownOpcode : DataError {
  explicit UnknownOpcode(std::uint8_t b)
      : DataError("unknown opcode 0x" + to_hex(b)), opcode(b) {}
  std::uint8_t opcode;

 private:
  static std::string to_hex(std::uint8_t b);
};

struct TruncatedInstruction : DataError {
  using DataError::DataError;
};

// The byte string held a complete instruction plus leftover bytes.
struct TrailingBytes : DataError {
  using DataError::DataError;
};

enum class SegOverride : std::uint8_t { None, ES, CS, SS, DS, FS, GS };

struct InstrComponents {
  SegOverride seg_override = SegOverride::None;
  bool op_size_override = false;   // 0x66
  bool addr_size_override = false; // 0x67
  bool lock = false;               // 0xF0
  std::uint8_t opcode = 0;
  std::optional<std::uint8_t> modrm;
  std::optional<std::uint8_t> sib;
  std::vector<std::uint8_t> disp;  // little-endian; empty = absent; size 1, 2 or 4
  std::vector<std::uint8_t> imm;   // little-endian; empty = absent; size 1, 2, 4 or 8

  bool has_prefix() const {
    return seg_override != SegOverride::None || op_size_override ||
           addr_size_override || lock;
  }
};

std::vector<std::uint8_t> parse_hex(std::string_view hex);

// Decodes one instruction from the documented x86-64 subset (mov, lea,
// add/sub/and/or/xor/cmp/test, push/pop, inc/dec, jmp/jcc rel8, jmp/call
// rel32, ret, nop, int3). Legacy prefixes are recorded; REX bytes are
// consumed, with REX.W widening the mov r64 immediate. Two-byte (0x0F) and
// VEX/EVEX opcodes raise UnknownOpcode. Throws TrailingBytes unless the
// string holds exactly one instruction.
InstrComponents decode_instr(const std::vector<std::uint8_t>& bytes);
InstrComponents decode_instr(std::string_view hex);

// Rule-based layout, 406 = 5 + 9 + 256 + 20 + 20 + 32 + 64:
//   [0..4]     presence of (prefix bytes, modrm, sib, disp, imm)
//   [5..13]    prefix: segment one-hot (ES,CS,SS,DS,FS,GS; all-zero = none)
//              + op-size, addr-size, lock flags
//   [14..269]  opcode one-hot
//   [270..289] modrm: mod(4) + reg(8) + rm(8) one-hots, zero when absent
//   [290..309] sib: scale(4) + index(8) + base(8) one-hots, zero when absent
//   [310..341] displacement bits, little-endian, LSB first, zero-extended
//   [342..405] immediate bits, little-endian, LSB first, zero-extended
inline constexpr std::size_t kEncodedDim = 406;
inline constexpr std::size_t kOpcodeOffset = 14;
inline constexpr std::size_t kModrmOffset = 270;
inline constexpr std::size_t kSibOffset = 290;
inline constexpr std::size_t kDispOffset = 310;
inline constexpr std::size_t kImmOffset = 342;

using EncodedVector406 = std::array<double, kEncodedDim>;

EncodedVector406 encode_instr(const InstrComponents& c);

enum class Aggregate { Mean, Sum };

struct NodeFeature406 {
  std::array<double, kEncodedDim> values{};
  int instr_count = 0;
};

// Aggregates the encodings of a node's instructions (element-wise mean by
// default). Decode errors carry the failing instruction's index.
NodeFeature406 encode_node(const std::vector<std::string>& instr_hex,
                           Aggregate agg = Aggregate::Mean);

}  // namespace mdg::x86
