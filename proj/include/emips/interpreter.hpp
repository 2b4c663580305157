#pragma once
// One-instruction-at-a-time ISA interpreter with the same architectural
// semantics as the pipeline (key file, CRYPT transitions, memory-stage
// transforms, delay-slot policy) and no timing model. Used as the
// equivalence oracle for the cycle-accurate simulator.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "emips/isa.hpp"
#include "emips/memory.hpp"
#include "emips/pipeline.hpp"
#include "emips/tdes.hpp"

namespace emips {

struct InterpResult {
    RunResult::Status status = RunResult::Status::Clean;
    std::string message;
    std::uint64_t instructions = 0;
};

class Interpreter {
public:
    Interpreter(const PipelineConfig& cfg, Memory imem, Memory dmem,
                std::optional<std::uint32_t> imem_top = std::nullopt)
        : cfg_(cfg),
          imem_(std::move(imem)),
          dmem_(std::move(dmem)),
          imem_top_(imem_top.value_or(imem_.top())) {
        dmem_marks_.assign(dmem_.size() / 8, false);
    }

    InterpResult run() {
        InterpResult res;
        try {
            while (true) {
                if (pc_ >= imem_top_) {
                    if (pending_) {
                        pc_ = pending_->target;
                        pending_.reset();
                        continue;
                    }
                    break;
                }
                if (res.instructions >= cfg_.max_cycles) {
                    res.status = RunResult::Status::MaxCycles;
                    res.message = "instruction budget exceeded (probable infinite loop)";
                    return res;
                }
                execute_one(res);
            }
        } catch (const SimFault& f) {
            res.status = RunResult::Status::Fault;
            res.message = f.what();
        }
        return res;
    }

    const std::array<std::uint32_t, 32>& gpr() const { return gpr_; }
    const KeySet& keys() const { return keys_; }
    bool crypt_flag() const { return crypt_flag_; }
    const Memory& dmem() const { return dmem_; }
    const std::vector<bool>& dmem_marks() const { return dmem_marks_; }

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
    std::uint32_t fetch_word(std::uint32_t pc) {
        Block64 block;
        try {
            block = imem_.read_block(pc & ~7u);
        } catch (const MemFault& f) {
            throw SimFault(f.what(), pc, seq_);
        }
        if (cfg_.variant == Variant::Encrypted && crypt_flag_) block = tdes_decrypt(block, schedules());
        return static_cast<std::uint32_t>((pc & 4) ? block & 0xFFFFFFFFull : block >> 32);
    }

    const TdesSchedules& schedules() {
        if (dirty_) {
            schedules_ = TdesSchedules(keys_);
            dirty_ = false;
        }
        return schedules_;
    }

    void key_write(bool upper, std::uint32_t value) {
        if (keys_locked_) return;
        DesKey& slot = keys_.slot(keys_.fill_ptr);
        if (upper) {
            slot = (static_cast<std::uint64_t>(value) << 32) | (slot & 0xFFFFFFFFull);
            keys_.fill_ptr = (keys_.fill_ptr + 1) % 3;
        } else {
            slot = (slot & 0xFFFFFFFF00000000ull) | value;
        }
        dirty_ = true;
    }

    void execute_one(InterpResult& res) {
        std::uint32_t word = fetch_word(pc_);
        Instruction i = decode(word);
        if (i.m == Mnemonic::Illegal) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "illegal instruction word 0x%08x", word);
            throw SimFault(buf, pc_, seq_);
        }
        ++seq_;
        ++res.instructions;

        std::uint32_t a = gpr_[i.rs], b = gpr_[i.rt];
        bool taken = false;
        std::uint32_t target = 0;
        auto set_gpr = [&](unsigned r, std::uint32_t v) {
            if (r != 0) gpr_[r] = v;
        };

        try {
            switch (i.m) {
                case Mnemonic::Add: set_gpr(i.rd, a + b); break;
                case Mnemonic::Sub: set_gpr(i.rd, a - b); break;
                case Mnemonic::And: set_gpr(i.rd, a & b); break;
                case Mnemonic::Or: set_gpr(i.rd, a | b); break;
                case Mnemonic::Slt:
                    set_gpr(i.rd, static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b));
                    break;
                case Mnemonic::Sll: set_gpr(i.rd, b << i.shamt); break;
                case Mnemonic::Addi: set_gpr(i.rt, a + static_cast<std::uint32_t>(i.imm)); break;
                case Mnemonic::Lw: {
                    std::uint32_t addr = a + static_cast<std::uint32_t>(i.imm);
                    Block64 block = dmem_.read_block(addr);
                    if (cfg_.variant != Variant::Plain && dmem_marks_[addr / 8]) {
                        block = cfg_.variant == Variant::Decrypted
                                    ? tdes_encrypt(block, schedules())
                                    : tdes_decrypt(block, schedules());
                    }
                    set_gpr(i.rt, static_cast<std::uint32_t>(block & 0xFFFFFFFFull));
                    break;
                }
                case Mnemonic::Sw: {
                    std::uint32_t addr = a + static_cast<std::uint32_t>(i.imm);
                    Block64 block = b;
                    bool transformed = crypt_flag_ && cfg_.variant != Variant::Plain;
                    if (transformed) {
                        block = cfg_.variant == Variant::Decrypted
                                    ? tdes_decrypt(block, schedules())
                                    : tdes_encrypt(block, schedules());
                    }
                    dmem_.write_block(addr, block);
                    dmem_marks_[addr / 8] = transformed;
                    break;
                }
                case Mnemonic::Lklw:
                case Mnemonic::Lkuw: {
                    std::uint32_t addr = a + static_cast<std::uint32_t>(i.imm);
                    Block64 block = dmem_.read_block(addr);
                    key_write(i.m == Mnemonic::Lkuw,
                              static_cast<std::uint32_t>(block & 0xFFFFFFFFull));
                    break;
                }
                case Mnemonic::Beq:
                    taken = a == b;
                    target = pc_ + 4 + static_cast<std::uint32_t>(i.imm) * 4;
                    break;
                case Mnemonic::Bne:
                    taken = a != b;
                    target = pc_ + 4 + static_cast<std::uint32_t>(i.imm) * 4;
                    break;
                case Mnemonic::J:
                    taken = true;
                    target = i.target * 4;
                    break;
                case Mnemonic::Crypt: {
                    bool enable = i.target != 0;
                    if (enable && !keys_locked_) keys_locked_ = true;
                    crypt_flag_ = enable;
                    break;
                }
                default: break;
            }
        } catch (const MemFault& f) {
            throw SimFault(f.what(), pc_, seq_);
        }

        pc_ += 4;
        if (taken) {
            int slots = cfg_.jump_policy == JumpPolicy::Delayed ? cfg_.delay_slots : 0;
            pending_ = pipe_detail::Redirect{target, seq_ + static_cast<std::uint64_t>(slots)};
        }
        if (pending_ && seq_ >= pending_->after_seq) {
            pc_ = pending_->target;
            pending_.reset();
        }
    }

    PipelineConfig cfg_;
    Memory imem_;
    Memory dmem_;
    std::uint32_t imem_top_;

    std::uint32_t pc_ = 0;
    std::array<std::uint32_t, 32> gpr_{};
    KeySet keys_;
    TdesSchedules schedules_;
    bool dirty_ = false;
    bool crypt_flag_ = false;
    bool keys_locked_ = false;
    std::optional<pipe_detail::Redirect> pending_;
    std::uint64_t seq_ = 0;
    std::vector<bool> dmem_marks_;
};

}  // namespace emips
