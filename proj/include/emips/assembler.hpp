#pragma once
// Two-pass assembler for the simulator's dialect:
//
//   # comment                 ; mnemonics case-insensitive
//   .text / .data             ; .text is the default section
//   Loop: add $r5, $r2, $r2   ; labels end with ':', registers $r<n> or $<n>
//   lw   $r6, 0($r5)
//   lklw 0($r1)               ; key loads take no destination register
//   crypt 1
//   .word 0x00422820          ; raw instruction slot (.text)
//   .org 104                  ; .data only: set fill address (8-aligned)
//   .word64 4b4952415450414c  ; .data: one 64-bit block
//   .word32 54504c41          ; .data: zero-padded into the LS half
//   .ascii8 "KIRATPAL"        ; .data: 8 chars, first char = MS byte
//
// Instructions pack two per 64-bit block, lower address in the MS half.
// If a CRYPT with nonzero argument would land in the first slot of a
// block, a NOP is inserted before it so the encrypted body starts on a
// block boundary (the crypt marker).

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "emips/isa.hpp"
#include "emips/memory.hpp"

namespace emips {

struct AsmError : std::runtime_error {
    std::vector<std::string> diagnostics;
    explicit AsmError(std::vector<std::string> diags)
        : std::runtime_error(join(diags)), diagnostics(std::move(diags)) {}

    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (auto& d : v) {
            if (!s.empty()) s += "\n";
            s += d;
        }
        return s;
    }
};

struct ProgramImage {
    std::vector<Block64> blocks;                 // packed instruction memory
    std::size_t slot_count = 0;                  // instruction slots incl. block pad
    std::map<std::string, std::uint32_t> symbols;  // label -> byte address
    std::optional<std::uint32_t> crypt_marker;   // first body block, bytes
    std::vector<std::pair<std::uint32_t, Block64>> data_blocks;

    std::uint32_t text_top() const { return static_cast<std::uint32_t>(slot_count * 4); }

    std::uint32_t word_at_slot(std::size_t slot) const {
        Block64 b = blocks[slot / 2];
        return static_cast<std::uint32_t>(slot % 2 == 0 ? b >> 32 : b & 0xFFFFFFFFu);
    }

    ImageFile to_image_file() const {
        ImageFile f;
        f.crypt_marker = crypt_marker;
        for (std::size_t i = 0; i < blocks.size(); ++i)
            f.records.emplace_back(static_cast<std::uint32_t>(i * 8), blocks[i]);
        return f;
    }

    ImageFile data_image_file() const {
        ImageFile f;
        f.records = data_blocks;
        return f;
    }
};

namespace asm_detail {

struct Item {
    int line = 0;
    Instruction instr;             // encoded in pass 2
    bool needs_target = false;     // branch/jump with a label operand
    std::string target_label;
    bool raw_word = false;         // .word in .text
    std::uint32_t raw_value = 0;
};

struct Parser {
    std::vector<std::string> errors;
    std::vector<Item> items;
    std::map<std::string, std::size_t> label_to_item;  // binds to next item
    std::map<std::string, int> label_line;
    std::map<std::uint32_t, Block64> data;
    bool in_data = false;
    std::uint32_t data_addr = 0;
    int crypt_enable_count = 0;
    bool seen_crypt_enable = false;

    void error(int line, const std::string& msg) {
        errors.push_back("line " + std::to_string(line) + ": " + msg);
    }

    static std::string lower(std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    bool parse_reg(const std::string& tok, unsigned& out) {
        std::string t = lower(trim(tok));
        if (t.size() < 2 || t[0] != '$') return false;
        std::size_t pos = 1;
        if (t[pos] == 'r') ++pos;
        if (pos >= t.size()) return false;
        unsigned v = 0;
        for (; pos < t.size(); ++pos) {
            if (!std::isdigit(static_cast<unsigned char>(t[pos]))) return false;
            v = v * 10 + static_cast<unsigned>(t[pos] - '0');
            if (v > 31) return false;
        }
        out = v;
        return true;
    }

    static bool parse_int(const std::string& tok, long long& out) {
        std::string t = trim(tok);
        if (t.empty()) return false;
        bool neg = false;
        std::size_t pos = 0;
        if (t[0] == '-') { neg = true; pos = 1; }
        int base = 10;
        if (t.size() >= pos + 2 && t[pos] == '0' && (t[pos + 1] == 'x' || t[pos + 1] == 'X')) {
            base = 16;
            pos += 2;
        }
        if (pos >= t.size()) return false;
        long long v = 0;
        for (; pos < t.size(); ++pos) {
            char c = static_cast<char>(std::tolower(static_cast<unsigned char>(t[pos])));
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else return false;
            v = v * base + d;
            if (v > 0x7FFFFFFFFFLL) return false;
        }
        out = neg ? -v : v;
        return true;
    }

    static std::vector<std::string> split_operands(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        bool quoted = false;
        for (char c : s) {
            if (c == '"') quoted = !quoted;
            if (c == ',' && !quoted) {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        cur = trim(cur);
        if (!cur.empty() || !out.empty()) out.push_back(cur);
        return out;
    }

    // "imm($rn)" -> (imm, reg)
    bool parse_mem_operand(const std::string& tok, long long& imm, unsigned& reg) {
        std::string t = trim(tok);
        auto open = t.find('(');
        auto close = t.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open)
            return false;
        std::string immpart = trim(t.substr(0, open));
        if (immpart.empty()) immpart = "0";
        if (!parse_int(immpart, imm)) return false;
        return parse_reg(t.substr(open + 1, close - open - 1), reg);
    }

    bool check_imm16(int line, long long v) {
        if (v < -32768 || v > 32767) {
            error(line, "immediate " + std::to_string(v) + " out of 16-bit signed range");
            return false;
        }
        return true;
    }

    void parse_line(int line, std::string text) {
        auto hash = text.find('#');
        if (hash != std::string::npos) text = text.substr(0, hash);
        text = trim(text);

        // labels (possibly several) ahead of the statement
        while (true) {
            auto colon = text.find(':');
            if (colon == std::string::npos) break;
            std::string head = trim(text.substr(0, colon));
            bool ident = !head.empty();
            for (char c : head)
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') ident = false;
            if (!ident || std::isdigit(static_cast<unsigned char>(head[0]))) break;
            if (label_to_item.count(head)) {
                error(line, "duplicate label '" + head + "' (first defined at line " +
                                std::to_string(label_line[head]) + ")");
            } else {
                label_to_item[head] = items.size();
                label_line[head] = line;
            }
            text = trim(text.substr(colon + 1));
        }
        if (text.empty()) return;

        std::string word, rest;
        auto sp = text.find_first_of(" \t");
        if (sp == std::string::npos) {
            word = text;
        } else {
            word = text.substr(0, sp);
            rest = trim(text.substr(sp + 1));
        }
        word = lower(word);

        if (!word.empty() && word[0] == '.') {
            parse_directive(line, word, rest);
            return;
        }
        parse_instruction(line, word, rest);
    }

    void parse_directive(int line, const std::string& dir, const std::string& rest) {
        if (dir == ".text") { in_data = false; return; }
        if (dir == ".data") { in_data = true; return; }
        if (dir == ".word") {
            if (in_data) { error(line, ".word is only valid in .text (use .word32/.word64)"); return; }
            long long v;
            if (!parse_int(rest, v) || v < 0 || v > 0xFFFFFFFFLL) {
                error(line, "bad .word value '" + rest + "'");
                return;
            }
            Item it;
            it.line = line;
            it.raw_word = true;
            it.raw_value = static_cast<std::uint32_t>(v);
            items.push_back(it);
            return;
        }
        if (!in_data) {
            error(line, dir + " is only valid in .data");
            return;
        }
        if (dir == ".org") {
            long long v;
            if (!parse_int(rest, v) || v < 0) { error(line, "bad .org address"); return; }
            if (v % 8 != 0) { error(line, ".org address must be 8-aligned"); return; }
            data_addr = static_cast<std::uint32_t>(v);
            return;
        }
        if (dir == ".word64") {
            std::uint64_t v;
            std::string t = trim(rest);
            if (t.rfind("0x", 0) == 0 || t.rfind("0X", 0) == 0) t = t.substr(2);
            if (!image_detail::parse_hex64(t, v)) {
                error(line, ".word64 expects 16 hex digits");
                return;
            }
            data[data_addr] = v;
            data_addr += 8;
            return;
        }
        if (dir == ".word32") {
            long long v;
            std::string t = trim(rest);
            bool plain_hex = t.size() == 8 && t.rfind("0x", 0) != 0;
            if (plain_hex) t = "0x" + t;
            if (!parse_int(t, v) || v < 0 || v > 0xFFFFFFFFLL) {
                error(line, ".word32 expects an 8-hex-digit or 0x value");
                return;
            }
            data[data_addr] = static_cast<std::uint64_t>(v) & 0xFFFFFFFFull;
            data_addr += 8;
            return;
        }
        if (dir == ".ascii8") {
            std::string t = trim(rest);
            if (t.size() != 10 || t.front() != '"' || t.back() != '"') {
                error(line, ".ascii8 expects a quoted string of exactly 8 characters");
                return;
            }
            std::uint64_t v = 0;
            for (int i = 1; i <= 8; ++i)
                v = (v << 8) | static_cast<unsigned char>(t[static_cast<std::size_t>(i)]);
            data[data_addr] = v;
            data_addr += 8;
            return;
        }
        error(line, "unknown directive " + dir);
    }

    void parse_instruction(int line, const std::string& mn, const std::string& rest) {
        if (in_data) {
            error(line, "instruction '" + mn + "' in .data section");
            return;
        }
        auto ops = split_operands(rest);
        Item it;
        it.line = line;
        Instruction& i = it.instr;

        auto arity = [&](std::size_t n) {
            if (ops.size() != n) {
                error(line, mn + " expects " + std::to_string(n) + " operand(s), got " +
                                std::to_string(ops.size()));
                return false;
            }
            return true;
        };
        auto reg_op = [&](const std::string& tok, unsigned& out) {
            if (!parse_reg(tok, out)) {
                error(line, "bad register '" + tok + "'");
                return false;
            }
            return true;
        };

        if (mn == "nop") {
            if (!rest.empty()) { error(line, "nop takes no operands"); return; }
            i = make_nop();
            items.push_back(it);
            return;
        }
        if (mn == "add" || mn == "sub" || mn == "and" || mn == "or" || mn == "slt") {
            if (!arity(3)) return;
            i.m = mn == "add" ? Mnemonic::Add
                : mn == "sub" ? Mnemonic::Sub
                : mn == "and" ? Mnemonic::And
                : mn == "or"  ? Mnemonic::Or
                              : Mnemonic::Slt;
            if (!reg_op(ops[0], i.rd) || !reg_op(ops[1], i.rs) || !reg_op(ops[2], i.rt)) return;
            items.push_back(it);
            return;
        }
        if (mn == "sll") {
            if (!arity(3)) return;
            i.m = Mnemonic::Sll;
            long long sh;
            if (!reg_op(ops[0], i.rd) || !reg_op(ops[1], i.rt)) return;
            if (!parse_int(ops[2], sh) || sh < 0 || sh > 31) {
                error(line, "bad shift amount '" + ops[2] + "'");
                return;
            }
            i.shamt = static_cast<unsigned>(sh);
            items.push_back(it);
            return;
        }
        if (mn == "addi") {
            if (!arity(3)) return;
            i.m = Mnemonic::Addi;
            long long v;
            if (!reg_op(ops[0], i.rt) || !reg_op(ops[1], i.rs)) return;
            if (!parse_int(ops[2], v)) { error(line, "bad immediate '" + ops[2] + "'"); return; }
            if (!check_imm16(line, v)) return;
            i.imm = static_cast<std::int32_t>(v);
            items.push_back(it);
            return;
        }
        if (mn == "lw" || mn == "sw") {
            if (!arity(2)) return;
            i.m = mn == "lw" ? Mnemonic::Lw : Mnemonic::Sw;
            long long off;
            if (!reg_op(ops[0], i.rt)) return;
            if (!parse_mem_operand(ops[1], off, i.rs)) {
                error(line, "bad memory operand '" + ops[1] + "'");
                return;
            }
            if (!check_imm16(line, off)) return;
            i.imm = static_cast<std::int32_t>(off);
            items.push_back(it);
            return;
        }
        if (mn == "lklw" || mn == "lkuw") {
            if (ops.size() == 2) {
                error(line, mn + " takes no destination register");
                return;
            }
            if (!arity(1)) return;
            i.m = mn == "lklw" ? Mnemonic::Lklw : Mnemonic::Lkuw;
            long long off;
            if (!parse_mem_operand(ops[0], off, i.rs)) {
                error(line, "bad memory operand '" + ops[0] + "'");
                return;
            }
            if (!check_imm16(line, off)) return;
            i.imm = static_cast<std::int32_t>(off);
            i.rt = 0;
            items.push_back(it);
            return;
        }
        if (mn == "beq" || mn == "bne") {
            if (!arity(3)) return;
            i.m = mn == "beq" ? Mnemonic::Beq : Mnemonic::Bne;
            if (!reg_op(ops[0], i.rs) || !reg_op(ops[1], i.rt)) return;
            long long disp;
            if (parse_int(ops[2], disp)) {
                if (!check_imm16(line, disp)) return;
                i.imm = static_cast<std::int32_t>(disp);
            } else {
                it.needs_target = true;
                it.target_label = trim(ops[2]);
            }
            items.push_back(it);
            return;
        }
        if (mn == "j") {
            if (!arity(1)) return;
            i.m = Mnemonic::J;
            long long addr;
            if (parse_int(ops[0], addr)) {
                if (addr < 0 || addr % 4 != 0 || (addr / 4) >= (1LL << 26)) {
                    error(line, "bad jump target address '" + ops[0] + "'");
                    return;
                }
                i.target = static_cast<std::uint32_t>(addr / 4);
            } else {
                it.needs_target = true;
                it.target_label = trim(ops[0]);
            }
            items.push_back(it);
            return;
        }
        if (mn == "crypt") {
            if (!arity(1)) return;
            i.m = Mnemonic::Crypt;
            long long v;
            if (!parse_int(ops[0], v) || v < 0 || v >= (1LL << 26)) {
                error(line, "bad crypt argument '" + ops[0] + "'");
                return;
            }
            i.target = static_cast<std::uint32_t>(v);
            if (v != 0) {
                ++crypt_enable_count;
                if (crypt_enable_count > 1)
                    error(line, "more than one CRYPT with nonzero argument");
                seen_crypt_enable = true;
            } else if (seen_crypt_enable) {
                error(line, "crypt 0 after crypt 1 is not supported");
            }
            items.push_back(it);
            return;
        }
        error(line, "unknown mnemonic '" + mn + "'");
    }
};

}  // namespace asm_detail

inline ProgramImage assemble(const std::string& source) {
    using namespace asm_detail;
    Parser p;
    std::istringstream in(source);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) p.parse_line(++lineno, line);

    // layout fix between passes: if the enabling CRYPT would sit in the
    // first slot of a block, slide it to the second with a NOP so the
    // encrypted body starts on a block boundary
    std::optional<std::size_t> crypt_index;
    for (std::size_t idx = 0; idx < p.items.size(); ++idx) {
        const Item& it = p.items[idx];
        if (!it.raw_word && it.instr.m == Mnemonic::Crypt && it.instr.target != 0) {
            crypt_index = idx;
            break;
        }
    }
    if (crypt_index && *crypt_index % 2 == 0) {
        Item pad;
        pad.line = p.items[*crypt_index].line;
        pad.instr = make_nop();
        p.items.insert(p.items.begin() + static_cast<std::ptrdiff_t>(*crypt_index), pad);
        for (auto& [name, idx] : p.label_to_item)
            if (idx >= *crypt_index) ++idx;
        ++*crypt_index;
    }

    // pass 2: resolve labels, encode
    ProgramImage img;
    for (auto& [name, idx] : p.label_to_item)
        img.symbols[name] = static_cast<std::uint32_t>(idx * 4);

    std::vector<std::uint32_t> words;
    words.reserve(p.items.size());
    for (std::size_t idx = 0; idx < p.items.size(); ++idx) {
        Item& it = p.items[idx];
        if (it.raw_word) {
            words.push_back(it.raw_value);
            continue;
        }
        Instruction instr = it.instr;
        if (it.needs_target) {
            auto sym = img.symbols.find(it.target_label);
            if (sym == img.symbols.end()) {
                p.error(it.line, "undefined label '" + it.target_label + "'");
                words.push_back(0);
                continue;
            }
            if (instr.m == Mnemonic::J) {
                instr.target = sym->second / 4;
            } else {
                // displacement in slots from the instruction after the branch
                std::int64_t disp =
                    (static_cast<std::int64_t>(sym->second) - (static_cast<std::int64_t>(idx) * 4 + 4)) / 4;
                if (disp < -32768 || disp > 32767) {
                    p.error(it.line, "branch displacement out of range");
                    words.push_back(0);
                    continue;
                }
                instr.imm = static_cast<std::int32_t>(disp);
            }
        }
        try {
            words.push_back(encode(instr));
        } catch (const EncodeError& e) {
            p.error(it.line, e.what());
            words.push_back(0);
        }
    }

    if (!p.errors.empty()) throw AsmError(std::move(p.errors));

    if (crypt_index)
        img.crypt_marker = static_cast<std::uint32_t>((*crypt_index * 4 & ~7u) + 8);

    img.slot_count = words.size();
    if (words.size() % 2 != 0) words.push_back(0);  // trailing pad NOP
    for (std::size_t k = 0; k < words.size(); k += 2)
        img.blocks.push_back((static_cast<Block64>(words[k]) << 32) | words[k + 1]);

    for (auto& [addr, block] : p.data) img.data_blocks.emplace_back(addr, block);
    return img;
}

// address / hex word / disassembly, one row per slot
inline std::string emit_listing(const ProgramImage& img) {
    std::ostringstream out;
    char buf[32];
    for (std::size_t slot = 0; slot < img.blocks.size() * 2; ++slot) {
        std::uint32_t w = img.word_at_slot(slot);
        std::snprintf(buf, sizeof buf, "%04zx  %08x  ", slot * 4, w);
        out << buf << disassemble(w) << "\n";
    }
    return out.str();
}

}  // namespace emips
