#pragma once
// Byte-addressed instruction/data memories with 64-bit-wide accesses and
// the shared text image format:
//
//   # comment
//   @crypt 64            optional, at most once; first block of the
//                        encrypted body (byte offset)
//   @136                 address marker (decimal bytes, 8-aligned)
//   4b4952415450414c     one 16-hex-digit block per line, MS byte at the
//                        lowest address; addresses advance by 8 between
//                        markers
//
// Default size 1024 bytes (10-bit address bus).

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "emips/tdes.hpp"

namespace emips {

struct MemFault : std::runtime_error {
    std::uint64_t addr;
    MemFault(const std::string& what, std::uint64_t a)
        : std::runtime_error(what + " at address " + std::to_string(a)), addr(a) {}
};

struct ImageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Memory {
public:
    explicit Memory(std::size_t size = 1024) : bytes_(size, 0) {
        if (size == 0 || (size & (size - 1)) != 0)
            throw std::invalid_argument("memory size must be a power of two");
    }

    std::size_t size() const { return bytes_.size(); }

    // Highest initialized byte + 1; the simulator stops fetching past it.
    std::uint32_t top() const { return top_; }
    void set_top(std::uint32_t t) { top_ = t; }

    Block64 read_block(std::uint64_t addr) const {
        check(addr);
        Block64 v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | bytes_[addr + i];
        return v;
    }

    void write_block(std::uint64_t addr, Block64 value) {
        check(addr);
        for (int i = 7; i >= 0; --i) {
            bytes_[addr + i] = static_cast<std::uint8_t>(value & 0xFF);
            value >>= 8;
        }
        if (addr + 8 > top_) top_ = static_cast<std::uint32_t>(addr + 8);
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    void check(std::uint64_t addr) const {
        if (addr % 8 != 0) throw MemFault("unaligned 64-bit access", addr);
        if (addr + 8 > bytes_.size()) throw MemFault("access out of range", addr);
    }

    std::vector<std::uint8_t> bytes_;
    std::uint32_t top_ = 0;
};

// Parsed image file: sparse (address, block) records plus metadata.
struct ImageFile {
    std::vector<std::pair<std::uint32_t, Block64>> records;
    std::optional<std::uint32_t> crypt_marker;
    std::optional<std::uint64_t> key_fingerprint;

    std::uint32_t extent() const {
        std::uint32_t e = 0;
        for (auto& [a, _] : records)
            if (a + 8 > e) e = a + 8;
        return e;
    }
};

namespace image_detail {

inline bool parse_hex64(const std::string& s, std::uint64_t& out) {
    if (s.size() != 16) return false;
    out = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else return false;
        out = (out << 4) | static_cast<unsigned>(d);
    }
    return true;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace image_detail

inline ImageFile parse_image(std::istream& in) {
    using namespace image_detail;
    ImageFile img;
    std::uint64_t addr = 0;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            // "# keyfp <16hex>" comment carries the key fingerprint
            std::istringstream cs(line.substr(hash + 1));
            std::string tag, value;
            if (cs >> tag >> value && tag == "keyfp") {
                std::uint64_t fp;
                if (parse_hex64(value, fp)) img.key_fingerprint = fp;
            }
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '@') {
            std::istringstream ms(line.substr(1));
            std::string word;
            ms >> word;
            if (word == "crypt") {
                long long v = -1;
                if (!(ms >> v) || v < 0 || v % 8 != 0)
                    throw ImageError("line " + std::to_string(lineno) +
                                     ": bad @crypt marker");
                img.crypt_marker = static_cast<std::uint32_t>(v);
                continue;
            }
            long long v = -1;
            try {
                v = std::stoll(word);
            } catch (...) {
                throw ImageError("line " + std::to_string(lineno) + ": bad address marker");
            }
            if (v < 0 || v % 8 != 0)
                throw ImageError("line " + std::to_string(lineno) +
                                 ": address marker must be 8-aligned");
            addr = static_cast<std::uint64_t>(v);
            continue;
        }
        std::uint64_t block;
        if (!parse_hex64(line, block))
            throw ImageError("line " + std::to_string(lineno) +
                             ": expected 16 hex digits, got '" + line + "'");
        img.records.emplace_back(static_cast<std::uint32_t>(addr), block);
        addr += 8;
    }
    return img;
}

inline ImageFile load_image_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ImageError("cannot open image file: " + path);
    return parse_image(in);
}

inline void apply_image(Memory& mem, const ImageFile& img) {
    for (auto& [addr, block] : img.records) {
        if (addr + 8 > mem.size())
            throw ImageError("image exceeds memory size at address " + std::to_string(addr));
        mem.write_block(addr, block);
    }
}

inline Memory load_image(const std::string& path, std::size_t mem_size = 1024) {
    Memory mem(mem_size);
    apply_image(mem, load_image_file(path));
    return mem;
}

inline std::string serialize_image(const ImageFile& img) {
    std::ostringstream out;
    char buf[32];
    if (img.key_fingerprint) {
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(*img.key_fingerprint));
        out << "# keyfp " << buf << "\n";
    }
    if (img.crypt_marker) out << "@crypt " << *img.crypt_marker << "\n";
    std::uint64_t next = 0;
    for (auto& [addr, block] : img.records) {
        if (addr != next) out << "@" << addr << "\n";
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(block));
        out << buf << "\n";
        next = addr + 8;
    }
    return out.str();
}

// Dump [lo, hi] of a memory as image text, block-aligned.
inline std::string dump_image(const Memory& mem, std::uint64_t lo, std::uint64_t hi) {
    ImageFile img;
    lo &= ~7ull;
    for (std::uint64_t a = lo; a <= hi && a + 8 <= mem.size(); a += 8)
        img.records.emplace_back(static_cast<std::uint32_t>(a), mem.read_block(a));
    return serialize_image(img);
}

inline void write_image_file(const std::string& path, const ImageFile& img) {
    std::ofstream out(path);
    if (!out) throw ImageError("cannot write image file: " + path);
    out << serialize_image(img);
}

}  // namespace emips
