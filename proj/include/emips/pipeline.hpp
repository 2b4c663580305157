#pragma once
// Cycle-accurate 5-stage pipeline (IF, ID, EX, MEM, WB) with crypto
// datapaths in IF and MEM, forwarding, load-use stall, flush / delayed
// jump policies, the key register file and the CRYPT mode flag.
//
// Mechanics, in brief:
//  - one 64-bit block fetch fills a 2-slot issue buffer; one instruction
//    issues per cycle; pc advances 4 per issue, 8 per block fetch
//  - stages run WB, MEM, EX, ID, IF against start-of-cycle latch
//    snapshots; WB writes the register file before ID reads it
//  - every bubble carries its cause (fill, stall, flush, fetch-crypto,
//    mem-crypto) and is counted when it passes WB, which makes
//    cycles = retired + stalls + flushes + crypto stalls + 4 an identity
//  - taken jumps/branches resolve at EX; squash and redirect are driven
//    by issue sequence numbers so delayed(n) keeps exactly the n
//    program-order delay slots
//  - the CRYPT instruction transitions at ID: the flag flips, younger
//    slots are squashed and fetch restarts at the next block through the
//    new fetch path; the key file locks at the first enable

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "emips/isa.hpp"
#include "emips/memory.hpp"
#include "emips/tdes.hpp"

namespace emips {

enum class Variant { Plain, Encrypted, Decrypted };

enum class JumpPolicy { Flush, Delayed };

struct PipelineConfig {
    Variant variant = Variant::Plain;
    bool forwarding = true;
    bool auto_stall_keys = true;
    JumpPolicy jump_policy = JumpPolicy::Flush;
    int delay_slots = 1;  // for Delayed; 1 or 2
    int crypto_latency = 0;
    std::uint64_t max_cycles = 1000000;
};

struct RunStats {
    std::uint64_t cycles = 0;
    std::uint64_t instructions_retired = 0;
    std::uint64_t stall_cycles = 0;
    std::uint64_t flush_bubbles = 0;
    std::uint64_t fetch_crypto_stalls = 0;
    std::uint64_t mem_crypto_stalls = 0;

    double cpi() const {
        return instructions_retired ? static_cast<double>(cycles) /
                                          static_cast<double>(instructions_retired)
                                    : 0.0;
    }
};

struct SimFault : std::runtime_error {
    std::uint32_t pc;
    std::uint64_t cycle;
    SimFault(const std::string& what, std::uint32_t pc_, std::uint64_t cycle_)
        : std::runtime_error(what + " (pc=" + std::to_string(pc_) +
                             ", cycle=" + std::to_string(cycle_) + ")"),
          pc(pc_),
          cycle(cycle_) {}
};

struct RunResult {
    enum class Status { Clean, MaxCycles, Fault };
    Status status = Status::Clean;
    std::string message;
};

namespace pipe_detail {

enum class Bubble { Fill, Stall, Flush, FetchCrypto, MemCrypto, Drain };

struct Latch {
    bool valid = false;
    Bubble tag = Bubble::Fill;

    Instruction instr;
    std::uint32_t word = 0;
    std::uint32_t addr = 0;
    std::uint64_t seq = 0;
    std::uint32_t a = 0, b = 0;    // rs / rt values read at ID
    std::uint32_t store_val = 0;   // rt value carried to MEM for sw
    bool crypt_active = false;     // CRYPT flag captured at ID
    std::uint32_t alu = 0;         // EX result or effective address
    std::uint32_t wb_value = 0;
    bool writes_gpr = false;
    unsigned dest = 0;
    bool is_load = false, is_store = false;
    bool is_key_lower = false, is_key_upper = false;

    static Latch bubble(Bubble t) {
        Latch l;
        l.tag = t;
        return l;
    }
};

inline bool reads_rs(Mnemonic m) {
    switch (m) {
        case Mnemonic::Add: case Mnemonic::Sub: case Mnemonic::And:
        case Mnemonic::Or: case Mnemonic::Slt: case Mnemonic::Addi:
        case Mnemonic::Lw: case Mnemonic::Sw: case Mnemonic::Beq:
        case Mnemonic::Bne: case Mnemonic::Lklw: case Mnemonic::Lkuw:
            return true;
        default:
            return false;
    }
}

inline bool reads_rt(Mnemonic m) {
    switch (m) {
        case Mnemonic::Add: case Mnemonic::Sub: case Mnemonic::And:
        case Mnemonic::Or: case Mnemonic::Slt: case Mnemonic::Sll:
        case Mnemonic::Sw: case Mnemonic::Beq: case Mnemonic::Bne:
            return true;
        default:
            return false;
    }
}

inline bool is_key_op(const Latch& l) {
    return l.valid && (l.is_key_lower || l.is_key_upper);
}

struct Redirect {
    std::uint32_t target = 0;
    std::uint64_t after_seq = 0;  // squash everything younger than this
};

}  // namespace pipe_detail

class Simulator {
public:
    Simulator(const PipelineConfig& cfg, Memory imem, Memory dmem,
              std::optional<std::uint32_t> imem_top = std::nullopt)
        : cfg_(cfg),
          imem_(std::move(imem)),
          dmem_(std::move(dmem)),
          dmem_initial_(dmem_),
          imem_top_(imem_top.value_or(imem_.top())) {
        reset();
    }

    void reset() {
        pc_ = 0;
        gpr_.fill(0);
        keys_ = KeySet{};
        schedules_ = TdesSchedules{};
        schedules_dirty_ = false;
        crypt_flag_ = false;
        keys_locked_ = false;
        if_id_ = id_ex_ = ex_mem_ = mem_wb_ = pipe_detail::Latch{};
        buffer_valid_ = false;
        fetch_wait_ = 0;
        mem_wait_ = 0;
        pending_.reset();
        next_seq_ = 1;
        stats_ = RunStats{};
        halted_ = false;
        dmem_ = dmem_initial_;
        dmem_marks_.assign(dmem_.size() / 8, false);
        last_fetch_tap_.reset();
        keys_at_crypt_.reset();
    }

    // one clock; throws SimFault on architectural faults
    void step() {
        using namespace pipe_detail;
        if (halted_) return;
        if (pipeline_empty()) {
            halted_ = true;
            return;
        }
        ++stats_.cycles;

        const Latch s_ifid = if_id_, s_idex = id_ex_, s_exmem = ex_mem_, s_memwb = mem_wb_;
        Latch n_ifid = s_ifid, n_idex = s_idex, n_exmem = s_exmem, n_memwb = s_memwb;
        std::optional<Redirect> redirect;
        std::vector<std::string> notes;
        std::optional<Latch> issued;

        // ---- WB ----
        write_back(s_memwb);

        // ---- MEM ----
        bool mem_frozen = false;
        if (s_exmem.valid && mem_access_needs_crypto(s_exmem)) {
            if (mem_wait_ == 0 && cfg_.crypto_latency > 0) {
                mem_wait_ = cfg_.crypto_latency;
                mem_frozen = true;
            } else if (mem_wait_ > 0) {
                --mem_wait_;
                mem_frozen = mem_wait_ > 0;
            }
        }
        if (mem_frozen) {
            n_memwb = Latch::bubble(Bubble::MemCrypto);
            notes.push_back("STALL(mem-crypto)");
            // everything upstream holds
            commit(n_ifid, n_idex, n_exmem, n_memwb, s_ifid, issued, notes);
            return;
        }
        n_memwb = mem_stage(s_exmem);

        // ---- EX ----
        n_exmem = ex_stage(s_idex, s_exmem, s_memwb, redirect);

        // ---- ID ----
        bool id_consumed = false;
        n_idex = id_stage(s_ifid, s_idex, s_exmem, redirect, id_consumed, notes);

        // ---- IF ----
        if (id_consumed || !s_ifid.valid) {
            n_ifid = fetch_issue(notes);
            issued = n_ifid.valid ? std::optional<Latch>(n_ifid) : std::nullopt;
        }

        // ---- redirect / squash ----
        if (redirect) {
            int squashed = 0;
            for (Latch* l : {&n_idex, &n_ifid}) {
                if (l->valid && l->seq > redirect->after_seq) {
                    *l = Latch::bubble(Bubble::Flush);
                    ++squashed;
                }
            }
            bool is_crypt = s_ifid.valid && s_ifid.instr.m == Mnemonic::Crypt && id_consumed;
            notes.push_back(std::string(is_crypt ? "FLUSH(crypt," : "FLUSH(jump,") +
                            std::to_string(squashed) + ")");
            if (next_seq_ > redirect->after_seq) {
                pc_ = redirect->target;
                buffer_valid_ = false;
                fetch_wait_ = 0;
                pending_.reset();
            } else {
                pending_ = *redirect;
            }
        }

        commit(n_ifid, n_idex, n_exmem, n_memwb, s_ifid, issued, notes);
    }

    RunResult run() {
        RunResult res;
        try {
            while (!halted_) {
                if (stats_.cycles >= cfg_.max_cycles) {
                    res.status = RunResult::Status::MaxCycles;
                    res.message = "cycle budget of " + std::to_string(cfg_.max_cycles) +
                                  " exceeded (probable infinite loop)";
                    return res;
                }
                step();
            }
        } catch (const SimFault& f) {
            res.status = RunResult::Status::Fault;
            res.message = f.what();
        }
        return res;
    }

    // accessors
    bool halted() const { return halted_; }
    std::uint32_t pc() const { return pc_; }
    const std::array<std::uint32_t, 32>& gpr() const { return gpr_; }
    const KeySet& keys() const { return keys_; }
    bool crypt_flag() const { return crypt_flag_; }
    const RunStats& stats() const { return stats_; }
    const Memory& dmem() const { return dmem_; }
    const Memory& imem() const { return imem_; }
    const std::vector<bool>& dmem_marks() const { return dmem_marks_; }
    std::uint32_t imem_top() const { return imem_top_; }
    std::optional<Block64> last_fetch_tap() const { return last_fetch_tap_; }
    std::optional<KeySet> keys_at_crypt() const { return keys_at_crypt_; }
    void set_trace(std::ostream* out) { trace_ = out; }

    // data memory with ciphertext blocks undone, for whole-system checks
    std::vector<std::uint8_t> decrypted_dmem() const {
        std::vector<std::uint8_t> out = dmem_.bytes();
        const TdesSchedules s(keys_);
        for (std::size_t blk = 0; blk < dmem_marks_.size(); ++blk) {
            if (!dmem_marks_[blk]) continue;
            Block64 v = dmem_.read_block(blk * 8);
            v = cfg_.variant == Variant::Decrypted ? tdes_encrypt(v, s) : tdes_decrypt(v, s);
            for (int i = 7; i >= 0; --i) {
                out[blk * 8 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xFF);
                v >>= 8;
            }
        }
        return out;
    }

private:
    using Latch = pipe_detail::Latch;
    using Bubble = pipe_detail::Bubble;
    using Redirect = pipe_detail::Redirect;

    bool pipeline_empty() const {
        return !if_id_.valid && !id_ex_.valid && !ex_mem_.valid && !mem_wb_.valid &&
               !pending_ && pc_ >= imem_top_;
    }

    void write_back(const Latch& l) {
        if (!l.valid) {
            switch (l.tag) {
                case Bubble::Fill: break;  // the constant 4 of the fill
                case Bubble::Stall: ++stats_.stall_cycles; break;
                case Bubble::FetchCrypto: ++stats_.fetch_crypto_stalls; break;
                case Bubble::MemCrypto: ++stats_.mem_crypto_stalls; break;
                case Bubble::Flush:
                case Bubble::Drain:  // drain slots bypassed by a redirect
                    ++stats_.flush_bubbles;
                    break;
            }
            return;
        }
        ++stats_.instructions_retired;
        if (l.writes_gpr && l.dest != 0) gpr_[l.dest] = l.wb_value;
        if ((l.is_key_lower || l.is_key_upper) && !keys_locked_) {
            DesKey& slot = keys_.slot(keys_.fill_ptr);
            if (l.is_key_lower) {
                slot = (slot & 0xFFFFFFFF00000000ull) | l.wb_value;
            } else {
                slot = (static_cast<std::uint64_t>(l.wb_value) << 32) | (slot & 0xFFFFFFFFull);
                keys_.fill_ptr = (keys_.fill_ptr + 1) % 3;
            }
            schedules_dirty_ = true;
        }
    }

    bool mem_access_needs_crypto(const Latch& l) const {
        if (cfg_.variant == Variant::Plain) return false;
        if (l.is_store && l.instr.m == Mnemonic::Sw)
            return l.crypt_active;
        if (l.is_load && l.instr.m == Mnemonic::Lw) {
            std::uint32_t addr = l.alu;
            if (addr % 8 != 0 || addr + 8 > dmem_.size()) return false;  // fault path
            return dmem_marks_[addr / 8];
        }
        return false;
    }

    const TdesSchedules& schedules() {
        if (schedules_dirty_) {
            schedules_ = TdesSchedules(keys_);
            schedules_dirty_ = false;
        }
        return schedules_;
    }

    Latch mem_stage(const Latch& in) {
        if (!in.valid) return in;
        Latch out = in;
        try {
            if (in.instr.m == Mnemonic::Lw) {
                Block64 block = dmem_.read_block(in.alu);
                if (cfg_.variant != Variant::Plain && dmem_marks_[in.alu / 8]) {
                    block = cfg_.variant == Variant::Decrypted
                                ? tdes_encrypt(block, schedules())
                                : tdes_decrypt(block, schedules());
                }
                out.wb_value = static_cast<std::uint32_t>(block & 0xFFFFFFFFull);
            } else if (in.instr.m == Mnemonic::Sw) {
                Block64 block = in.store_val;
                bool transformed = in.crypt_active && cfg_.variant != Variant::Plain;
                if (transformed) {
                    block = cfg_.variant == Variant::Decrypted
                                ? tdes_decrypt(block, schedules())
                                : tdes_encrypt(block, schedules());
                }
                dmem_.write_block(in.alu, block);
                dmem_marks_[in.alu / 8] = transformed;
            } else if (in.instr.m == Mnemonic::Lklw || in.instr.m == Mnemonic::Lkuw) {
                Block64 block = dmem_.read_block(in.alu);  // keys load raw
                out.wb_value = static_cast<std::uint32_t>(block & 0xFFFFFFFFull);
            }
        } catch (const MemFault& f) {
            throw SimFault(f.what(), in.addr, stats_.cycles);
        }
        return out;
    }

    Latch ex_stage(const Latch& in, const Latch& s_exmem, const Latch& s_memwb,
                   std::optional<Redirect>& redirect) {
        using namespace pipe_detail;
        if (!in.valid) return in;
        Latch out = in;

        std::uint32_t a = in.a, b = in.b, store_val = in.store_val;
        if (cfg_.forwarding) {
            auto forward = [&](unsigned reg, std::uint32_t fallback) {
                if (reg == 0) return fallback;
                if (s_exmem.valid && s_exmem.writes_gpr && s_exmem.dest == reg)
                    return s_exmem.wb_value;
                if (s_memwb.valid && s_memwb.writes_gpr && s_memwb.dest == reg)
                    return s_memwb.wb_value;
                return fallback;
            };
            if (reads_rs(in.instr.m)) a = forward(in.instr.rs, a);
            if (reads_rt(in.instr.m)) b = forward(in.instr.rt, b);
            if (in.instr.m == Mnemonic::Sw) store_val = forward(in.instr.rt, store_val);
        }
        out.a = a;
        out.b = b;
        out.store_val = store_val;

        bool taken = false;
        std::uint32_t target = 0;
        switch (in.instr.m) {
            case Mnemonic::Add: out.wb_value = a + b; break;
            case Mnemonic::Sub: out.wb_value = a - b; break;
            case Mnemonic::And: out.wb_value = a & b; break;
            case Mnemonic::Or: out.wb_value = a | b; break;
            case Mnemonic::Slt:
                out.wb_value = static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b);
                break;
            case Mnemonic::Sll: out.wb_value = b << in.instr.shamt; break;
            case Mnemonic::Addi:
                out.wb_value = a + static_cast<std::uint32_t>(in.instr.imm);
                break;
            case Mnemonic::Lw: case Mnemonic::Sw:
            case Mnemonic::Lklw: case Mnemonic::Lkuw:
                out.alu = a + static_cast<std::uint32_t>(in.instr.imm);
                break;
            case Mnemonic::Beq:
                taken = a == b;
                target = in.addr + 4 + static_cast<std::uint32_t>(in.instr.imm) * 4;
                break;
            case Mnemonic::Bne:
                taken = a != b;
                target = in.addr + 4 + static_cast<std::uint32_t>(in.instr.imm) * 4;
                break;
            case Mnemonic::J:
                taken = true;
                target = in.instr.target * 4;
                break;
            default: break;
        }
        if (taken) {
            int slots = cfg_.jump_policy == JumpPolicy::Delayed ? cfg_.delay_slots : 0;
            redirect = Redirect{target, in.seq + static_cast<std::uint64_t>(slots)};
        }
        return out;
    }

    Latch id_stage(const Latch& in, const Latch& s_idex, const Latch& s_exmem,
                   std::optional<Redirect>& redirect, bool& consumed,
                   std::vector<std::string>& notes) {
        using namespace pipe_detail;
        if (!in.valid) {
            consumed = true;
            return in;
        }
        // a redirect resolved this very cycle dooms this instruction
        if (redirect && in.seq > redirect->after_seq) {
            consumed = true;
            return Latch::bubble(Bubble::Flush);
        }
        if (in.instr.m == Mnemonic::Illegal) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "illegal instruction word 0x%08x", in.word);
            throw SimFault(buf, in.addr, stats_.cycles);
        }

        if (in.instr.m == Mnemonic::Crypt) {
            if (cfg_.auto_stall_keys && (is_key_op(s_idex) || is_key_op(s_exmem))) {
                consumed = false;
                notes.push_back("STALL(key-wait)");
                return Latch::bubble(Bubble::Stall);
            }
            consumed = true;
            Latch out = in;
            out.crypt_active = crypt_flag_;
            bool enable = in.instr.target != 0;
            if (enable != crypt_flag_) {
                crypt_flag_ = enable;
                if (enable && !keys_locked_) {
                    keys_locked_ = true;
                    keys_at_crypt_ = keys_;
                }
                redirect = Redirect{in.addr + 4, in.seq};
            }
            return out;
        }

        // data hazards
        bool stall = false;
        auto uses = [&](unsigned reg) {
            return reg != 0 && ((reads_rs(in.instr.m) && in.instr.rs == reg) ||
                                (reads_rt(in.instr.m) && in.instr.rt == reg));
        };
        if (cfg_.forwarding) {
            if (s_idex.valid && s_idex.is_load && s_idex.writes_gpr && uses(s_idex.dest)) {
                stall = true;
                notes.push_back("STALL(load-use)");
            }
        } else {
            for (const Latch* l : {&s_idex, &s_exmem}) {
                if (l->valid && l->writes_gpr && uses(l->dest)) {
                    stall = true;
                    notes.push_back("STALL(data-hazard)");
                    break;
                }
            }
        }
        if (stall) {
            consumed = false;
            return Latch::bubble(Bubble::Stall);
        }

        consumed = true;
        Latch out = in;
        out.crypt_active = crypt_flag_;
        out.a = gpr_[in.instr.rs];
        out.b = gpr_[in.instr.rt];
        switch (in.instr.m) {
            case Mnemonic::Add: case Mnemonic::Sub: case Mnemonic::And:
            case Mnemonic::Or: case Mnemonic::Slt: case Mnemonic::Sll:
                out.writes_gpr = true;
                out.dest = in.instr.rd;
                break;
            case Mnemonic::Addi:
                out.writes_gpr = true;
                out.dest = in.instr.rt;
                break;
            case Mnemonic::Lw:
                out.writes_gpr = true;
                out.dest = in.instr.rt;
                out.is_load = true;
                break;
            case Mnemonic::Sw:
                out.is_store = true;
                out.store_val = gpr_[in.instr.rt];
                break;
            case Mnemonic::Lklw:
                out.is_load = true;
                out.is_key_lower = true;
                break;
            case Mnemonic::Lkuw:
                out.is_load = true;
                out.is_key_upper = true;
                break;
            default:
                break;
        }
        return out;
    }

    Latch fetch_issue(std::vector<std::string>& notes) {
        using namespace pipe_detail;
        if (pending_ && pc_ >= imem_top_) {
            // delay slots past the end of the image do not exist
            pc_ = pending_->target;
            pending_.reset();
            buffer_valid_ = false;
            fetch_wait_ = 0;
        }
        if (pc_ >= imem_top_) return Latch::bubble(Bubble::Drain);

        std::uint32_t block_addr = pc_ & ~7u;
        if (!buffer_valid_ || buffer_addr_ != block_addr) {
            bool crypto_fetch =
                cfg_.variant == Variant::Encrypted && crypt_flag_ && cfg_.crypto_latency > 0;
            if (crypto_fetch) {
                if (fetch_wait_ == 0) {
                    fetch_wait_ = cfg_.crypto_latency;
                    notes.push_back("STALL(fetch-crypto)");
                    return Latch::bubble(Bubble::FetchCrypto);
                }
                --fetch_wait_;
                if (fetch_wait_ > 0) {
                    notes.push_back("STALL(fetch-crypto)");
                    return Latch::bubble(Bubble::FetchCrypto);
                }
            }
            Block64 block;
            try {
                block = imem_.read_block(block_addr);
            } catch (const MemFault& f) {
                throw SimFault(f.what(), pc_, stats_.cycles);
            }
            if (cfg_.variant == Variant::Encrypted && crypt_flag_) {
                block = tdes_decrypt(block, schedules());
            } else if (cfg_.variant == Variant::Decrypted && crypt_flag_) {
                last_fetch_tap_ = tdes_encrypt(block, schedules());  // checkable tap
            }
            buffer_valid_ = true;
            buffer_addr_ = block_addr;
            buffer_words_[0] = static_cast<std::uint32_t>(block >> 32);
            buffer_words_[1] = static_cast<std::uint32_t>(block & 0xFFFFFFFFull);
        }

        Latch out;
        out.valid = true;
        out.word = buffer_words_[(pc_ >> 2) & 1];
        out.instr = decode(out.word);
        out.addr = pc_;
        out.seq = next_seq_++;
        pc_ += 4;

        if (pending_ && out.seq >= pending_->after_seq) {
            pc_ = pending_->target;
            pending_.reset();
            buffer_valid_ = false;
            fetch_wait_ = 0;
        }
        return out;
    }

    void commit(const Latch& n_ifid, const Latch& n_idex, const Latch& n_exmem,
                const Latch& n_memwb, const Latch& s_ifid, const std::optional<Latch>& issued,
                const std::vector<std::string>& notes) {
        if (trace_) emit_trace(s_ifid, issued, notes);
        if_id_ = n_ifid;
        id_ex_ = n_idex;
        ex_mem_ = n_exmem;
        mem_wb_ = n_memwb;
        if (gpr_[0] != 0) throw SimFault("r0 corrupted", pc_, stats_.cycles);
    }

    void emit_trace(const Latch& s_ifid, const std::optional<Latch>& issued,
                    const std::vector<std::string>& notes) {
        auto item = [](const Latch& l) -> std::string {
            if (!l.valid) return "--";
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04x:", l.addr);
            return buf + disassemble(l.word);
        };
        std::ostream& out = *trace_;
        out << "C" << (stats_.cycles - 1);
        out << " IF:" << (issued ? item(*issued) : "--");
        out << " ID:" << item(s_ifid);
        out << " EX:" << item(id_ex_);
        out << " MEM:" << item(ex_mem_);
        out << " WB:" << item(mem_wb_);
        out << " crypt=" << (crypt_flag_ ? 1 : 0);
        for (auto& n : notes) out << " " << n;
        out << "\n";
    }

    PipelineConfig cfg_;
    Memory imem_;
    Memory dmem_;
    Memory dmem_initial_;
    std::uint32_t imem_top_;

    std::uint32_t pc_ = 0;
    std::array<std::uint32_t, 32> gpr_{};
    KeySet keys_;
    TdesSchedules schedules_;
    bool schedules_dirty_ = false;
    bool crypt_flag_ = false;
    bool keys_locked_ = false;
    std::optional<KeySet> keys_at_crypt_;

    pipe_detail::Latch if_id_, id_ex_, ex_mem_, mem_wb_;
    bool buffer_valid_ = false;
    std::uint32_t buffer_addr_ = 0;
    std::array<std::uint32_t, 2> buffer_words_{};
    int fetch_wait_ = 0;
    int mem_wait_ = 0;
    std::optional<pipe_detail::Redirect> pending_;
    std::uint64_t next_seq_ = 1;

    std::vector<bool> dmem_marks_;
    std::optional<Block64> last_fetch_tap_;
    RunStats stats_;
    bool halted_ = false;
    std::ostream* trace_ = nullptr;
};

// stable final-state dump consumed by tests and scripts
inline std::string final_state_dump(const Simulator& sim) {
    std::ostringstream out;
    char buf[64];
    for (int i = 0; i < 32; ++i) {
        std::snprintf(buf, sizeof buf, "r%d=%08x\n", i, sim.gpr()[static_cast<std::size_t>(i)]);
        out << buf;
    }
    for (int i = 0; i < 3; ++i) {
        std::snprintf(buf, sizeof buf, "k%d=%016llx\n", i + 1,
                      static_cast<unsigned long long>(sim.keys().slot(i)));
        out << buf;
    }
    out << "crypt=" << (sim.crypt_flag() ? 1 : 0) << "\n";
    const RunStats& st = sim.stats();
    out << "cycles=" << st.cycles << "\n";
    out << "retired=" << st.instructions_retired << "\n";
    out << "stalls=" << st.stall_cycles << "\n";
    out << "flushes=" << st.flush_bubbles << "\n";
    out << "fetch_crypto_stalls=" << st.fetch_crypto_stalls << "\n";
    out << "mem_crypto_stalls=" << st.mem_crypto_stalls << "\n";
    std::snprintf(buf, sizeof buf, "cpi=%.3f\n", st.cpi());
    out << buf;
    return out.str();
}

}  // namespace emips
