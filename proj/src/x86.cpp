#include "mdg/x86.hpp"

#include <cstdio>

namespace mdg::x86 {

std::string UnknownOpcode::to_hex(std::uint8_t b) {
  char buf[3];
  std::snprintf(buf, sizeof(buf), "%02X", b);
  return buf;
}

std::vector<std::uint8_t> parse_hex(std::string_view hex) {
  if (hex.empty() || hex.size() % 2 != 0) {
    throw DataError("hex string must have non-zero even length");
  }
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw DataError(std::string("invalid hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

namespace {

// Operand template after the opcode byte. Z-sized immediates are 16-bit
// under the 0x66 prefix and 32-bit otherwise; V follows Z but widens to
// 64-bit under REX.W (mov r64, imm64).
enum class Fmt : std::uint8_t {
  None,
  Modrm,
  ModrmImm8,
  ModrmImmZ,
  Imm8,
  Imm16,
  ImmZ,
  ImmV,
};

struct FmtTable {
  std::array<std::optional<Fmt>, 256> entry{};

  constexpr void set(std::uint8_t op, Fmt f) { entry[op] = f; }
  constexpr void set_range(std::uint8_t lo, std::uint8_t hi, Fmt f) {
    for (int op = lo; op <= hi; ++op) entry[static_cast<std::size_t>(op)] = f;
  }
};

constexpr FmtTable build_table() {
  FmtTable t;
  // add/or/and/sub/xor/cmp share the classic 6-opcode pattern.
  for (std::uint8_t base : {0x00, 0x08, 0x20, 0x28, 0x30, 0x38}) {
    t.set_range(base, base + 3, Fmt::Modrm);        // r/m,r and r,r/m forms
    t.set(base + 4, Fmt::Imm8);                     // AL, imm8
    t.set(base + 5, Fmt::ImmZ);                     // eAX, immz
  }
  t.set_range(0x50, 0x5F, Fmt::None);               // push/pop r64
  t.set(0x68, Fmt::ImmZ);                           // push immz
  t.set(0x6A, Fmt::Imm8);                           // push imm8
  t.set_range(0x70, 0x7F, Fmt::Imm8);               // jcc rel8
  t.set(0x80, Fmt::ModrmImm8);                      // grp1 r/m8, imm8
  t.set(0x81, Fmt::ModrmImmZ);                      // grp1 r/m, immz
  t.set(0x83, Fmt::ModrmImm8);                      // grp1 r/m, imm8
  t.set(0x84, Fmt::Modrm);                          // test r/m8, r8
  t.set(0x85, Fmt::Modrm);                          // test r/m, r
  t.set_range(0x88, 0x8B, Fmt::Modrm);              // mov r/m,r and r,r/m
  t.set(0x8D, Fmt::Modrm);                          // lea
  t.set(0x8F, Fmt::Modrm);                          // pop r/m
  t.set(0x90, Fmt::None);                           // nop
  t.set(0xA8, Fmt::Imm8);                           // test al, imm8
  t.set(0xA9, Fmt::ImmZ);                           // test eax, immz
  t.set_range(0xB0, 0xB7, Fmt::Imm8);               // mov r8, imm8
  t.set_range(0xB8, 0xBF, Fmt::ImmV);               // mov r, immz/imm64
  t.set(0xC2, Fmt::Imm16);                          // ret imm16
  t.set(0xC3, Fmt::None);                           // ret
  t.set(0xC6, Fmt::ModrmImm8);                      // mov r/m8, imm8
  t.set(0xC7, Fmt::ModrmImmZ);                      // mov r/m, immz
  t.set(0xCC, Fmt::None);                           // int3
  t.set(0xE8, Fmt::ImmZ);                           // call rel32
  t.set(0xE9, Fmt::ImmZ);                           // jmp rel32
  t.set(0xEB, Fmt::Imm8);                           // jmp rel8
  t.set(0xFE, Fmt::Modrm);                          // grp4 inc/dec r/m8
  t.set(0xFF, Fmt::Modrm);                          // grp5 inc/dec/call/jmp/push r/m
  return t;
}

constexpr FmtTable kTable = build_table();

}  // namespace

InstrComponents decode_instr(const std::vector<std::uint8_t>& bytes) {
  InstrComponents c;
  std::size_t pos = 0;
  bool rex_w = false;
  for (; pos < bytes.size(); ++pos) {
    const std::uint8_t b = bytes[pos];
    if (b == 0x26) c.seg_override = SegOverride::ES;
    else if (b == 0x2E) c.seg_override = SegOverride::CS;
    else if (b == 0x36) c.seg_override = SegOverride::SS;
    else if (b == 0x3E) c.seg_override = SegOverride::DS;
    else if (b == 0x64) c.seg_override = SegOverride::FS;
    else if (b == 0x65) c.seg_override = SegOverride::GS;
    else if (b == 0x66) c.op_size_override = true;
    else if (b == 0x67) c.addr_size_override = true;
    else if (b == 0xF0) c.lock = true;
    else if (b >= 0x40 && b <= 0x4F) rex_w = (b & 0x08) != 0;
    else break;
  }
  if (pos >= bytes.size()) throw TruncatedInstruction("instruction ends before opcode");
  c.opcode = bytes[pos++];
  const auto fmt = kTable.entry[c.opcode];
  if (!fmt) throw UnknownOpcode(c.opcode);

  auto take = [&](std::size_t n, const char* what) {
    if (pos + n > bytes.size()) {
      throw TruncatedInstruction(std::string("instruction ends inside ") + what);
    }
    std::vector<std::uint8_t> out(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return out;
  };

  const bool wants_modrm = *fmt == Fmt::Modrm || *fmt == Fmt::ModrmImm8 ||
                           *fmt == Fmt::ModrmImmZ;
  if (wants_modrm) {
    c.modrm = take(1, "modrm")[0];
    const std::uint8_t mod = *c.modrm >> 6;
    const std::uint8_t rm = *c.modrm & 0x07;
    std::size_t disp_size = 0;
    if (mod != 3) {
      if (rm == 4) c.sib = take(1, "sib")[0];
      if (mod == 1) {
        disp_size = 1;
      } else if (mod == 2) {
        disp_size = 4;
      } else {  // mod == 0
        if (rm == 5) disp_size = 4;  // rip-relative
        else if (c.sib && (*c.sib & 0x07) == 5) disp_size = 4;
      }
    }
    if (disp_size > 0) c.disp = take(disp_size, "displacement");
  }

  std::size_t imm_size = 0;
  switch (*fmt) {
    case Fmt::Imm8:
    case Fmt::ModrmImm8: imm_size = 1; break;
    case Fmt::Imm16: imm_size = 2; break;
    case Fmt::ImmZ:
    case Fmt::ModrmImmZ: imm_size = c.op_size_override ? 2 : 4; break;
    case Fmt::ImmV: imm_size = rex_w ? 8 : (c.op_size_override ? 2 : 4); break;
    default: break;
  }
  if (imm_size > 0) c.imm = take(imm_size, "immediate");

  if (pos != bytes.size()) {
    throw TrailingBytes("trailing bytes after a complete instruction");
  }
  return c;
}

InstrComponents decode_instr(std::string_view hex) {
  return decode_instr(parse_hex(hex));
}

EncodedVector406 encode_instr(const InstrComponents& c) {
  EncodedVector406 v{};
  // presence flags: prefix bytes, modrm, sib, disp, imm
  v[0] = c.has_prefix() ? 1.0 : 0.0;
  v[1] = c.modrm ? 1.0 : 0.0;
  v[2] = c.sib ? 1.0 : 0.0;
  v[3] = c.disp.empty() ? 0.0 : 1.0;
  v[4] = c.imm.empty() ? 0.0 : 1.0;

  if (c.seg_override != SegOverride::None) {
    v[5 + static_cast<std::size_t>(c.seg_override) - 1] = 1.0;
  }
  v[11] = c.op_size_override ? 1.0 : 0.0;
  v[12] = c.addr_size_override ? 1.0 : 0.0;
  v[13] = c.lock ? 1.0 : 0.0;

  v[kOpcodeOffset + c.opcode] = 1.0;

  if (c.modrm) {
    v[kModrmOffset + (*c.modrm >> 6)] = 1.0;
    v[kModrmOffset + 4 + ((*c.modrm >> 3) & 0x07)] = 1.0;
    v[kModrmOffset + 12 + (*c.modrm & 0x07)] = 1.0;
  }
  if (c.sib) {
    v[kSibOffset + (*c.sib >> 6)] = 1.0;
    v[kSibOffset + 4 + ((*c.sib >> 3) & 0x07)] = 1.0;
    v[kSibOffset + 12 + (*c.sib & 0x07)] = 1.0;
  }
  for (std::size_t i = 0; i < c.disp.size(); ++i) {
    for (std::size_t bit = 0; bit < 8; ++bit) {
      if (c.disp[i] & (1u << bit)) v[kDispOffset + 8 * i + bit] = 1.0;
    }
  }
  for (std::size_t i = 0; i < c.imm.size(); ++i) {
    for (std::size_t bit = 0; bit < 8; ++bit) {
      if (c.imm[i] & (1u << bit)) v[kImmOffset + 8 * i + bit] = 1.0;
    }
  }
  return v;
}

NodeFeature406 encode_node(const std::vector<std::string>& instr_hex, Aggregate agg) {
  if (instr_hex.empty()) throw DataError("encode_node: empty instruction list");
  NodeFeature406 f;
  for (std::size_t i = 0; i < instr_hex.size(); ++i) {
    EncodedVector406 v;
    try {
      v = encode_instr(decode_instr(instr_hex[i]));
    } catch (const DataError& e) {
      throw DataError("instruction " + std::to_string(i) + ": " + e.what());
    }
    for (std::size_t j = 0; j < kEncodedDim; ++j) f.values[j] += v[j];
  }
  f.instr_count = static_cast<int>(instr_hex.size());
  if (agg == Aggregate::Mean) {
    for (auto& x : f.values) x /= static_cast<double>(f.instr_count);
  }
  return f;
}

}  // namespace mdg::x86
