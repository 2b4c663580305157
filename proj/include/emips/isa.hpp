#pragma once
// 32-bit instruction word formats, the implemented MIPS subset plus the
// three key/crypto instructions (lklw, lkuw, crypt), and the
// encode/decode/disassemble trio.
//
// Opcode map: standard MIPS-I values for the common subset, fresh ones
// for the extensions:
//   R-type  op=0x00, funct: add=0x20 sub=0x22 and=0x24 or=0x25 slt=0x2A sll=0x00
//   addi=0x08 lw=0x23 sw=0x2B beq=0x04 bne=0x05 j=0x02
//   lklw=0x30 lkuw=0x31 crypt=0x3F

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace emips {

enum class Mnemonic {
    Add, Sub, And, Or, Slt, Sll,
    Addi, Lw, Sw, Beq, Bne, Lklw, Lkuw,
    J, Crypt,
    Illegal,
};

enum class Format { R, I, Jf, Bad };

constexpr Format format_of(Mnemonic m) {
    switch (m) {
        case Mnemonic::Add: case Mnemonic::Sub: case Mnemonic::And:
        case Mnemonic::Or: case Mnemonic::Slt: case Mnemonic::Sll:
            return Format::R;
        case Mnemonic::Addi: case Mnemonic::Lw: case Mnemonic::Sw:
        case Mnemonic::Beq: case Mnemonic::Bne:
        case Mnemonic::Lklw: case Mnemonic::Lkuw:
            return Format::I;
        case Mnemonic::J: case Mnemonic::Crypt:
            return Format::Jf;
        default:
            return Format::Bad;
    }
}

struct OpCodes {
    static constexpr unsigned R = 0x00;
    static constexpr unsigned Addi = 0x08, Lw = 0x23, Sw = 0x2B;
    static constexpr unsigned Beq = 0x04, Bne = 0x05, J = 0x02;
    static constexpr unsigned Lklw = 0x30, Lkuw = 0x31, Crypt = 0x3F;
    static constexpr unsigned FAdd = 0x20, FSub = 0x22, FAnd = 0x24;
    static constexpr unsigned FOr = 0x25, FSlt = 0x2A, FSll = 0x00;
};

// One decoded instruction. Field population follows the layout of the
// mnemonic; unused fields stay zero. `raw` keeps the source word for
// Illegal so the pipeline can report it and the disassembler can emit
// a .word line.
struct Instruction {
    Mnemonic m = Mnemonic::Illegal;
    unsigned rs = 0, rt = 0, rd = 0, shamt = 0;
    std::int32_t imm = 0;      // sign-extended 16-bit immediate
    std::uint32_t target = 0;  // 26-bit jump target / crypt argument
    std::uint32_t raw = 0;

    bool is_nop() const {
        return m == Mnemonic::Sll && rd == 0 && rt == 0 && shamt == 0;
    }
    bool operator==(const Instruction& o) const {
        return m == o.m && rs == o.rs && rt == o.rt && rd == o.rd &&
               shamt == o.shamt && imm == o.imm && target == o.target &&
               (m != Mnemonic::Illegal || raw == o.raw);
    }
};

inline Instruction make_nop() {
    Instruction i;
    i.m = Mnemonic::Sll;
    return i;
}

struct EncodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace isa_detail {
inline void check_field(unsigned v, unsigned width, const char* name) {
    if (v >= (1u << width))
        throw EncodeError(std::string(name) + " exceeds " + std::to_string(width) + " bits");
}
inline void check_imm(std::int32_t v) {
    if (v < -32768 || v > 32767)
        throw EncodeError("immediate out of 16-bit signed range");
}
}  // namespace isa_detail

inline std::uint32_t encode(const Instruction& in) {
    using namespace isa_detail;
    check_field(in.rs, 5, "rs");
    check_field(in.rt, 5, "rt");
    check_field(in.rd, 5, "rd");
    check_field(in.shamt, 5, "shamt");
    auto r_word = [&](unsigned funct) {
        return (in.rs << 21) | (in.rt << 16) | (in.rd << 11) | (in.shamt << 6) | funct;
    };
    auto i_word = [&](unsigned op) {
        check_imm(in.imm);
        return (op << 26) | (in.rs << 21) | (in.rt << 16) |
               (static_cast<std::uint32_t>(in.imm) & 0xFFFFu);
    };
    auto j_word = [&](unsigned op) {
        if (in.target >= (1u << 26)) throw EncodeError("target exceeds 26 bits");
        return (op << 26) | in.target;
    };
    switch (in.m) {
        case Mnemonic::Add: return r_word(OpCodes::FAdd);
        case Mnemonic::Sub: return r_word(OpCodes::FSub);
        case Mnemonic::And: return r_word(OpCodes::FAnd);
        case Mnemonic::Or:  return r_word(OpCodes::FOr);
        case Mnemonic::Slt: return r_word(OpCodes::FSlt);
        case Mnemonic::Sll: return r_word(OpCodes::FSll);
        case Mnemonic::Addi: return i_word(OpCodes::Addi);
        case Mnemonic::Lw:   return i_word(OpCodes::Lw);
        case Mnemonic::Sw:   return i_word(OpCodes::Sw);
        case Mnemonic::Beq:  return i_word(OpCodes::Beq);
        case Mnemonic::Bne:  return i_word(OpCodes::Bne);
        case Mnemonic::Lklw: return i_word(OpCodes::Lklw);
        case Mnemonic::Lkuw: return i_word(OpCodes::Lkuw);
        case Mnemonic::J:     return j_word(OpCodes::J);
        case Mnemonic::Crypt: return j_word(OpCodes::Crypt);
        default: throw EncodeError("cannot encode illegal instruction");
    }
}

// Strict decode: a word is legal iff it is in the image of encode, so
// unused fields must be zero (e.g. shamt for add, rs for sll, rt for
// lklw/lkuw). Anything else decodes to Illegal carrying the raw word.
inline Instruction decode(std::uint32_t word) {
    Instruction out;
    out.raw = word;
    unsigned op = word >> 26;
    unsigned rs = (word >> 21) & 31, rt = (word >> 16) & 31;
    unsigned rd = (word >> 11) & 31, shamt = (word >> 6) & 31;
    unsigned funct = word & 63;
    std::int32_t imm = static_cast<std::int16_t>(word & 0xFFFFu);
    std::uint32_t target = word & 0x03FFFFFFu;

    auto r_instr = [&](Mnemonic m) {
        out.m = m;
        out.rs = rs; out.rt = rt; out.rd = rd; out.shamt = shamt;
        return out;
    };
    auto i_instr = [&](Mnemonic m) {
        out.m = m;
        out.rs = rs; out.rt = rt; out.imm = imm;
        return out;
    };

    switch (op) {
        case OpCodes::R:
            if (funct == OpCodes::FSll) {
                if (rs != 0) break;  // sll encodes rs=0
                out.m = Mnemonic::Sll;
                out.rt = rt; out.rd = rd; out.shamt = shamt;
                return out;
            }
            if (shamt != 0) break;  // arithmetic R-types encode shamt=0
            switch (funct) {
                case OpCodes::FAdd: return r_instr(Mnemonic::Add);
                case OpCodes::FSub: return r_instr(Mnemonic::Sub);
                case OpCodes::FAnd: return r_instr(Mnemonic::And);
                case OpCodes::FOr:  return r_instr(Mnemonic::Or);
                case OpCodes::FSlt: return r_instr(Mnemonic::Slt);
                default: break;
            }
            break;
        case OpCodes::Addi: return i_instr(Mnemonic::Addi);
        case OpCodes::Lw:   return i_instr(Mnemonic::Lw);
        case OpCodes::Sw:   return i_instr(Mnemonic::Sw);
        case OpCodes::Beq:  return i_instr(Mnemonic::Beq);
        case OpCodes::Bne:  return i_instr(Mnemonic::Bne);
        case OpCodes::Lklw:
        case OpCodes::Lkuw:
            if (rt != 0) break;  // no destination field
            return i_instr(op == OpCodes::Lklw ? Mnemonic::Lklw : Mnemonic::Lkuw);
        case OpCodes::J:
            out.m = Mnemonic::J;
            out.target = target;
            return out;
        case OpCodes::Crypt:
            out.m = Mnemonic::Crypt;
            out.target = target;
            return out;
        default: break;
    }
    out.m = Mnemonic::Illegal;
    return out;
}

inline const char* mnemonic_name(Mnemonic m) {
    switch (m) {
        case Mnemonic::Add: return "add";
        case Mnemonic::Sub: return "sub";
        case Mnemonic::And: return "and";
        case Mnemonic::Or: return "or";
        case Mnemonic::Slt: return "slt";
        case Mnemonic::Sll: return "sll";
        case Mnemonic::Addi: return "addi";
        case Mnemonic::Lw: return "lw";
        case Mnemonic::Sw: return "sw";
        case Mnemonic::Beq: return "beq";
        case Mnemonic::Bne: return "bne";
        case Mnemonic::Lklw: return "lklw";
        case Mnemonic::Lkuw: return "lkuw";
        case Mnemonic::J: return "j";
        case Mnemonic::Crypt: return "crypt";
        default: return "illegal";
    }
}

// Emits the assembler's own dialect: lowercase mnemonics, registers as
// $r<n>, memory operands imm($r<n>). Branch targets render as raw slot
// displacements and j targets as byte addresses, so disassembly always
// re-assembles to the same word.
inline std::string disassemble(std::uint32_t word) {
    Instruction i = decode(word);
    if (word == 0) return "nop";
    auto reg = [](unsigned n) { return "$r" + std::to_string(n); };
    char buf[64];
    switch (i.m) {
        case Mnemonic::Add: case Mnemonic::Sub: case Mnemonic::And:
        case Mnemonic::Or: case Mnemonic::Slt:
            return std::string(mnemonic_name(i.m)) + " " + reg(i.rd) + ", " +
                   reg(i.rs) + ", " + reg(i.rt);
        case Mnemonic::Sll:
            return "sll " + reg(i.rd) + ", " + reg(i.rt) + ", " + std::to_string(i.shamt);
        case Mnemonic::Addi:
            return "addi " + reg(i.rt) + ", " + reg(i.rs) + ", " + std::to_string(i.imm);
        case Mnemonic::Lw: case Mnemonic::Sw:
            return std::string(mnemonic_name(i.m)) + " " + reg(i.rt) + ", " +
                   std::to_string(i.imm) + "(" + reg(i.rs) + ")";
        case Mnemonic::Lklw: case Mnemonic::Lkuw:
            return std::string(mnemonic_name(i.m)) + " " + std::to_string(i.imm) +
                   "(" + reg(i.rs) + ")";
        case Mnemonic::Beq: case Mnemonic::Bne:
            return std::string(mnemonic_name(i.m)) + " " + reg(i.rs) + ", " +
                   reg(i.rt) + ", " + std::to_string(i.imm);
        case Mnemonic::J:
            return "j " + std::to_string(static_cast<std::uint64_t>(i.target) * 4);
        case Mnemonic::Crypt:
            return "crypt " + std::to_string(i.target);
        default:
            std::snprintf(buf, sizeof buf, ".word 0x%08x", word);
            return buf;
    }
}

}  // namespace emips
