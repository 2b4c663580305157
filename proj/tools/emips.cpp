// Command-line front end: assemble, encrypt/decrypt images, run/trace
// simulations, disassemble.
//
// Exit codes: 0 success, 1 usage/file/assembly error, 2 cycle budget
// exceeded, 3 architectural fault.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "emips/assembler.hpp"
#include "emips/image_tool.hpp"
#include "emips/interpreter.hpp"
#include "emips/isa.hpp"
#include "emips/memory.hpp"
#include "emips/pipeline.hpp"

namespace {

using namespace emips;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

void emit(const std::optional<std::string>& path, const std::string& text) {
    if (path)
        write_file(*path, text);
    else
        std::cout << text;
}

struct KeyArgs {
    std::string k1 = "0", k2 = "0", k3 = "0";
    std::string keyfile;

    static std::uint64_t parse_key(std::string s) {
        if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s = s.substr(2);
        while (s.size() < 16) s.insert(s.begin(), '0');
        std::uint64_t v;
        if (!image_detail::parse_hex64(s, v))
            throw std::runtime_error("bad key value '" + s + "' (want up to 16 hex digits)");
        return v;
    }

    KeySet keyset() const {
        KeySet ks;
        if (!keyfile.empty()) {
            std::istringstream in(read_file(keyfile));
            std::string line;
            int n = 0;
            while (std::getline(in, line) && n < 3) {
                auto hash = line.find('#');
                if (hash != std::string::npos) line = line.substr(0, hash);
                line = image_detail::trim(line);
                if (line.empty()) continue;
                ks.slot(n++) = parse_key(line);
            }
            if (n != 3) throw std::runtime_error("key file must hold three 16-hex-digit lines");
            return ks;
        }
        ks.k1 = parse_key(k1);
        ks.k2 = parse_key(k2);
        ks.k3 = parse_key(k3);
        return ks;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--k1", k1, "key 1 (hex, 64-bit)");
        cmd->add_option("--k2", k2, "key 2 (hex, 64-bit)");
        cmd->add_option("--k3", k3, "key 3 (hex, 64-bit)");
        cmd->add_option("--keys", keyfile, "key file: three 16-hex-digit lines");
    }
};

int cmd_asm(const std::string& source_path, const std::optional<std::string>& out,
            const std::optional<std::string>& data_out,
            const std::optional<std::string>& listing_out) {
    ProgramImage img;
    try {
        img = assemble(read_file(source_path));
    } catch (const AsmError& e) {
        std::cerr << source_path << ": assembly failed\n" << e.what() << "\n";
        return 1;
    }
    emit(out, serialize_image(img.to_image_file()));
    if (data_out) write_file(*data_out, serialize_image(img.data_image_file()));
    if (listing_out) write_file(*listing_out, emit_listing(img));
    return 0;
}

int cmd_encrypt(const std::string& imem_path, const std::optional<std::string>& out,
                const KeyArgs& keys) {
    EncryptedImage enc = encrypt_image_file(load_image_file(imem_path), keys.keyset());
    emit(out, serialize_image(enc.to_image_file()));
    return 0;
}

int cmd_decrypt(const std::string& imem_path, const std::optional<std::string>& out,
                const KeyArgs& keys) {
    ImageFile in = load_image_file(imem_path);
    DecryptReport rep = decrypt_image_file(in, keys.keyset());
    if (rep.fingerprint_mismatch)
        std::cerr << "warning: key fingerprint mismatch; body will likely be garbage\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f%% (%zu/%zu)", rep.illegal_ratio() * 100.0,
                  rep.illegal_slots, rep.body_slots);
    std::cerr << "body illegal-slot ratio: " << buf << "\n";
    ImageFile outimg;
    outimg.crypt_marker = in.crypt_marker;
    for (std::size_t i = 0; i < rep.blocks.size(); ++i)
        outimg.records.emplace_back(static_cast<std::uint32_t>(i * 8), rep.blocks[i]);
    emit(out, serialize_image(outimg));
    return 0;
}

int cmd_disasm(const std::string& imem_path, const KeyArgs& keys, bool have_keys) {
    ImageFile img = load_image_file(imem_path);
    std::vector<Block64> blocks;
    std::uint32_t next = 0;
    for (auto& [addr, block] : img.records) {
        if (addr != next) throw std::runtime_error("instruction image must be contiguous");
        blocks.push_back(block);
        next += 8;
    }
    if (have_keys && img.crypt_marker)
        blocks = decrypt_blocks(blocks, *img.crypt_marker, keys.keyset()).blocks;
    char buf[32];
    for (std::size_t slot = 0; slot < blocks.size() * 2; ++slot) {
        std::uint32_t w = static_cast<std::uint32_t>(
            slot % 2 == 0 ? blocks[slot / 2] >> 32 : blocks[slot / 2] & 0xFFFFFFFFull);
        std::snprintf(buf, sizeof buf, "%04zx  %08x  ", slot * 4, w);
        std::cout << buf << disassemble(w) << "\n";
    }
    return 0;
}

struct RunArgs {
    std::string imem_path;
    std::string dmem_path;
    std::string variant = "plain";
    bool no_forwarding = false;
    bool no_auto_stall_keys = false;
    std::string jump_policy = "flush";
    int crypto_latency = 0;
    std::uint64_t max_cycles = 1000000;
    std::string trace_path;
    std::string dump_dmem;
    bool json = false;
    std::string preset;
    bool variant_explicit = false;
};

int cmd_run(const RunArgs& args) {
    PipelineConfig cfg;
    if (!args.preset.empty()) {
        if (args.preset != "paper")
            throw std::runtime_error("unknown preset '" + args.preset + "'");
        cfg.variant = Variant::Encrypted;
    }
    if (args.variant_explicit || args.preset.empty()) {
        if (args.variant == "plain") cfg.variant = Variant::Plain;
        else if (args.variant == "encrypted") cfg.variant = Variant::Encrypted;
        else if (args.variant == "decrypted") cfg.variant = Variant::Decrypted;
        else throw std::runtime_error("unknown variant '" + args.variant + "'");
    }
    cfg.forwarding = !args.no_forwarding;
    cfg.auto_stall_keys = !args.no_auto_stall_keys;
    if (args.jump_policy == "flush") {
        cfg.jump_policy = JumpPolicy::Flush;
    } else if (args.jump_policy.rfind("delayed:", 0) == 0) {
        cfg.jump_policy = JumpPolicy::Delayed;
        cfg.delay_slots = std::stoi(args.jump_policy.substr(8));
        if (cfg.delay_slots < 1 || cfg.delay_slots > 2)
            throw std::runtime_error("delayed:<n> takes n in {1,2}");
    } else {
        throw std::runtime_error("unknown jump policy '" + args.jump_policy + "'");
    }
    cfg.crypto_latency = args.crypto_latency;
    cfg.max_cycles = args.max_cycles;

    Memory imem = load_image(args.imem_path);
    Memory dmem = args.dmem_path.empty() ? Memory() : load_image(args.dmem_path);
    Simulator sim(cfg, std::move(imem), std::move(dmem));

    std::ofstream trace_file;
    if (!args.trace_path.empty()) {
        trace_file.open(args.trace_path);
        if (!trace_file) throw std::runtime_error("cannot write trace: " + args.trace_path);
        sim.set_trace(&trace_file);
    }

    RunResult res = sim.run();
    if (res.status == RunResult::Status::MaxCycles) {
        std::cerr << "error: " << res.message << "\n";
        return 2;
    }
    if (res.status == RunResult::Status::Fault) {
        std::cerr << "error: " << res.message << "\n";
        return 3;
    }

    if (args.json) {
        nlohmann::ordered_json j;
        const RunStats& st = sim.stats();
        j["cycles"] = st.cycles;
        j["retired"] = st.instructions_retired;
        j["stalls"] = st.stall_cycles;
        j["flushes"] = st.flush_bubbles;
        j["fetch_crypto_stalls"] = st.fetch_crypto_stalls;
        j["mem_crypto_stalls"] = st.mem_crypto_stalls;
        j["cpi"] = st.cpi();
        j["gpr"] = sim.gpr();
        char buf[24];
        std::vector<std::string> ks;
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(sim.keys().slot(i)));
            ks.emplace_back(buf);
        }
        j["keys"] = ks;
        j["crypt"] = sim.crypt_flag() ? 1 : 0;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << final_state_dump(sim);
    }

    if (!args.dump_dmem.empty()) {
        auto dots = args.dump_dmem.find("..");
        if (dots == std::string::npos)
            throw std::runtime_error("--dump-dmem expects <lo>..<hi>");
        std::uint64_t lo = std::stoull(args.dump_dmem.substr(0, dots));
        std::uint64_t hi = std::stoull(args.dump_dmem.substr(dots + 2));
        std::cout << dump_image(sim.dmem(), lo, hi);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"five-stage MIPS-subset pipeline simulator with T-DES crypto datapaths"};
    app.require_subcommand(1);

    // asm
    auto* asm_cmd = app.add_subcommand("asm", "assemble a source file to an instruction image");
    std::string asm_source;
    std::optional<std::string> asm_out, asm_data, asm_listing;
    asm_cmd->add_option("source", asm_source, "assembly source file")->required();
    asm_cmd->add_option("-o,--output", asm_out, "instruction image output (default stdout)");
    asm_cmd->add_option("--data", asm_data, "write the .data section image here");
    asm_cmd->add_option("--listing", asm_listing, "write an address/word/disassembly listing");

    // encrypt / decrypt
    auto* enc_cmd = app.add_subcommand("encrypt", "encrypt the post-marker body of an image");
    std::string enc_in;
    std::optional<std::string> enc_out;
    KeyArgs enc_keys;
    enc_cmd->add_option("image", enc_in, "instruction image")->required();
    enc_cmd->add_option("-o,--output", enc_out, "output image (default stdout)");
    enc_keys.attach(enc_cmd);

    auto* dec_cmd = app.add_subcommand("decrypt", "decrypt the post-marker body of an image");
    std::string dec_in;
    std::optional<std::string> dec_out;
    KeyArgs dec_keys;
    dec_cmd->add_option("image", dec_in, "encrypted instruction image")->required();
    dec_cmd->add_option("-o,--output", dec_out, "output image (default stdout)");
    dec_keys.attach(dec_cmd);

    // run
    auto* run_cmd = app.add_subcommand("run", "run a program image on the pipeline");
    RunArgs run_args;
    run_cmd->add_option("imem", run_args.imem_path, "instruction image")->required();
    run_cmd->add_option("dmem", run_args.dmem_path, "data image (optional)");
    run_cmd->add_option("--variant", run_args.variant, "plain | encrypted | decrypted");
    run_cmd->add_flag("--no-forwarding", run_args.no_forwarding, "disable operand forwarding");
    run_cmd->add_flag("--no-auto-stall-keys", run_args.no_auto_stall_keys,
                      "do not stall CRYPT until key loads retire");
    run_cmd->add_option("--jump-policy", run_args.jump_policy, "flush | delayed:1 | delayed:2");
    run_cmd->add_option("--crypto-latency", run_args.crypto_latency,
                        "extra cycles per crypto block operation");
    run_cmd->add_option("--max-cycles", run_args.max_cycles, "cycle budget");
    run_cmd->add_option("--trace", run_args.trace_path, "write a per-cycle trace here");
    run_cmd->add_option("--dump-dmem", run_args.dump_dmem, "dump data memory range <lo>..<hi>");
    run_cmd->add_flag("--json", run_args.json, "machine-readable final state");
    run_cmd->add_option("--preset", run_args.preset, "'paper': encrypted-variant configuration");

    // disasm
    auto* dis_cmd = app.add_subcommand("disasm", "disassemble an instruction image");
    std::string dis_in;
    KeyArgs dis_keys;
    dis_cmd->add_option("image", dis_in, "instruction image")->required();
    dis_keys.attach(dis_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (asm_cmd->parsed()) return cmd_asm(asm_source, asm_out, asm_data, asm_listing);
        if (enc_cmd->parsed()) return cmd_encrypt(enc_in, enc_out, enc_keys);
        if (dec_cmd->parsed()) return cmd_decrypt(dec_in, dec_out, dec_keys);
        if (run_cmd->parsed()) {
            run_args.variant_explicit = run_cmd->count("--variant") > 0;
            return cmd_run(run_args);
        }
        if (dis_cmd->parsed()) {
            bool have_keys = !dis_keys.keyfile.empty() || dis_cmd->count("--k1") ||
                             dis_cmd->count("--k2") || dis_cmd->count("--k3");
            return cmd_disasm(dis_in, dis_keys, have_keys);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
