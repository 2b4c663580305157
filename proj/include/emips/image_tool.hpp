#pragma once
// Offline encryptor/decryptor for program images: ECB-transforms the
// blocks from the crypt marker onward, leaving the key-loading preamble
// in plaintext. Carries a non-secret key fingerprint so decryption with
// the wrong keys can be flagged.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emips/isa.hpp"
#include "emips/memory.hpp"
#include "emips/tdes.hpp"

namespace emips {

struct ImageToolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a over the three key values, big-endian byte order
inline std::uint64_t key_fingerprint(const KeySet& keys) {
    std::uint64_t h = 1469598103934665603ull;
    for (int k = 0; k < 3; ++k) {
        std::uint64_t v = keys.slot(k);
        for (int i = 7; i >= 0; --i) {
            h ^= (v >> (8 * i)) & 0xFF;
            h *= 1099511628211ull;
        }
    }
    return h;
}

struct EncryptedImage {
    std::vector<Block64> blocks;   // preamble plaintext + body ciphertext
    std::uint32_t crypt_marker = 0;
    std::uint64_t fingerprint = 0;

    ImageFile to_image_file() const {
        ImageFile f;
        f.crypt_marker = crypt_marker;
        f.key_fingerprint = fingerprint;
        for (std::size_t i = 0; i < blocks.size(); ++i)
            f.records.emplace_back(static_cast<std::uint32_t>(i * 8), blocks[i]);
        return f;
    }
};

inline EncryptedImage encrypt_blocks(const std::vector<Block64>& blocks,
                                     std::uint32_t crypt_marker, const KeySet& keys) {
    if (crypt_marker % 8 != 0)
        throw ImageToolError("crypt marker must be block-aligned");
    EncryptedImage out;
    out.crypt_marker = crypt_marker;
    out.fingerprint = key_fingerprint(keys);
    out.blocks = blocks;
    const TdesSchedules s(keys);
    for (std::size_t i = crypt_marker / 8; i < out.blocks.size(); ++i)
        out.blocks[i] = tdes_encrypt(out.blocks[i], s);
    return out;
}

struct DecryptReport {
    std::vector<Block64> blocks;
    bool fingerprint_mismatch = false;
    std::size_t body_slots = 0;
    std::size_t illegal_slots = 0;

    double illegal_ratio() const {
        return body_slots ? static_cast<double>(illegal_slots) / static_cast<double>(body_slots)
                          : 0.0;
    }
};

inline DecryptReport decrypt_blocks(const std::vector<Block64>& blocks,
                                    std::uint32_t crypt_marker, const KeySet& keys,
                                    std::optional<std::uint64_t> expected_fp = std::nullopt) {
    if (crypt_marker % 8 != 0)
        throw ImageToolError("crypt marker must be block-aligned");
    DecryptReport out;
    out.blocks = blocks;
    out.fingerprint_mismatch = expected_fp && *expected_fp != key_fingerprint(keys);
    const TdesSchedules s(keys);
    for (std::size_t i = crypt_marker / 8; i < out.blocks.size(); ++i) {
        Block64 b = tdes_decrypt(out.blocks[i], s);
        out.blocks[i] = b;
        for (int slot = 0; slot < 2; ++slot) {
            std::uint32_t w =
                static_cast<std::uint32_t>(slot == 0 ? b >> 32 : b & 0xFFFFFFFFull);
            ++out.body_slots;
            if (decode(w).m == Mnemonic::Illegal) ++out.illegal_slots;
        }
    }
    return out;
}

// file-level wrappers over the shared image format
inline EncryptedImage encrypt_image_file(const ImageFile& in, const KeySet& keys) {
    if (!in.crypt_marker)
        throw ImageToolError(
            "image has no crypt marker; the program never enables crypto "
            "(assemble a program containing 'crypt 1')");
    std::vector<Block64> blocks;
    std::uint32_t next = 0;
    for (auto& [addr, block] : in.records) {
        if (addr != next)
            throw ImageToolError("instruction image must be contiguous from address 0");
        blocks.push_back(block);
        next += 8;
    }
    return encrypt_blocks(blocks, *in.crypt_marker, keys);
}

inline DecryptReport decrypt_image_file(const ImageFile& in, const KeySet& keys) {
    if (!in.crypt_marker) throw ImageToolError("image has no crypt marker");
    std::vector<Block64> blocks;
    std::uint32_t next = 0;
    for (auto& [addr, block] : in.records) {
        if (addr != next)
            throw ImageToolError("instruction image must be contiguous from address 0");
        blocks.push_back(block);
        next += 8;
    }
    return decrypt_blocks(blocks, *in.crypt_marker, keys, in.key_fingerprint);
}

}  // namespace emips
