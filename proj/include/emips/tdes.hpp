#pragma once
// DES / Triple-DES (EDE) block cipher used by the fetch decryptor, the
// memory-stage crypto cores and the offline image tool. Bit numbering is
// the FIPS convention internally: bit 1 is the MSB of the 64-bit value.
// Key parity bits are carried but never validated (all-zero keys are
// legal and common in the test programs).

#include <array>
#include <cstdint>

namespace emips {

using Block64 = std::uint64_t;
using DesKey = std::uint64_t;

// 16 round subkeys, 48 bits each (low bits of the word).
using SubkeySchedule = std::array<std::uint64_t, 16>;

// Three EDE keys plus the load pointer driven by lklw/lkuw retirement.
struct KeySet {
    DesKey k1 = 0;
    DesKey k2 = 0;
    DesKey k3 = 0;
    int fill_ptr = 0;  // 0..2, advances on lkuw retirement, wraps mod 3

    DesKey& slot(int i) { return i == 0 ? k1 : (i == 1 ? k2 : k3); }
    const DesKey& slot(int i) const { return i == 0 ? k1 : (i == 1 ? k2 : k3); }
    bool operator==(const KeySet& o) const {
        return k1 == o.k1 && k2 == o.k2 && k3 == o.k3;
    }
};

namespace des_detail {

// FIPS 46-3 tables. Entries are 1-based source bit positions, MSB = 1.
inline constexpr int IP[64] = {
    58, 50, 42, 34, 26, 18, 10, 2, 60, 52, 44, 36, 28, 20, 12, 4,
    62, 54, 46, 38, 30, 22, 14, 6, 64, 56, 48, 40, 32, 24, 16, 8,
    57, 49, 41, 33, 25, 17, 9,  1, 59, 51, 43, 35, 27, 19, 11, 3,
    61, 53, 45, 37, 29, 21, 13, 5, 63, 55, 47, 39, 31, 23, 15, 7};

inline constexpr int FP[64] = {
    40, 8, 48, 16, 56, 24, 64, 32, 39, 7, 47, 15, 55, 23, 63, 31,
    38, 6, 46, 14, 54, 22, 62, 30, 37, 5, 45, 13, 53, 21, 61, 29,
    36, 4, 44, 12, 52, 20, 60, 28, 35, 3, 43, 11, 51, 19, 59, 27,
    34, 2, 42, 10, 50, 18, 58, 26, 33, 1, 41, 9,  49, 17, 57, 25};

inline constexpr int E[48] = {
    32, 1,  2,  3,  4,  5,  4,  5,  6,  7,  8,  9,
    8,  9,  10, 11, 12, 13, 12, 13, 14, 15, 16, 17,
    16, 17, 18, 19, 20, 21, 20, 21, 22, 23, 24, 25,
    24, 25, 26, 27, 28, 29, 28, 29, 30, 31, 32, 1};

inline constexpr int P[32] = {
    16, 7, 20, 21, 29, 12, 28, 17, 1,  15, 23, 26, 5,  18, 31, 10,
    2,  8, 24, 14, 32, 27, 3,  9,  19, 13, 30, 6,  22, 11, 4,  25};

inline constexpr int PC1[56] = {
    57, 49, 41, 33, 25, 17, 9,  1,  58, 50, 42, 34, 26, 18,
    10, 2,  59, 51, 43, 35, 27, 19, 11, 3,  60, 52, 44, 36,
    63, 55, 47, 39, 31, 23, 15, 7,  62, 54, 46, 38, 30, 22,
    14, 6,  61, 53, 45, 37, 29, 21, 13, 5,  28, 20, 12, 4};

inline constexpr int PC2[48] = {
    14, 17, 11, 24, 1,  5,  3,  28, 15, 6,  21, 10,
    23, 19, 12, 4,  26, 8,  16, 7,  27, 20, 13, 2,
    41, 52, 31, 37, 47, 55, 30, 40, 51, 45, 33, 48,
    44, 49, 39, 56, 34, 53, 46, 42, 50, 36, 29, 32};

inline constexpr int SHIFTS[16] = {1, 1, 2, 2, 2, 2, 2, 2, 1, 2, 2, 2, 2, 2, 2, 1};

inline constexpr std::uint8_t SBOX[8][64] = {
    {14, 4,  13, 1, 2,  15, 11, 8,  3,  10, 6,  12, 5,  9,  0, 7,
     0,  15, 7,  4, 14, 2,  13, 1,  10, 6,  12, 11, 9,  5,  3, 8,
     4,  1,  14, 8, 13, 6,  2,  11, 15, 12, 9,  7,  3,  10, 5, 0,
     15, 12, 8,  2, 4,  9,  1,  7,  5,  11, 3,  14, 10, 0,  6, 13},
    {15, 1,  8,  14, 6,  11, 3,  4,  9,  7, 2,  13, 12, 0, 5,  10,
     3,  13, 4,  7,  15, 2,  8,  14, 12, 0, 1,  10, 6,  9, 11, 5,
     0,  14, 7,  11, 10, 4,  13, 1,  5,  8, 12, 6,  9,  3, 2,  15,
     13, 8,  10, 1,  3,  15, 4,  2,  11, 6, 7,  12, 0,  5, 14, 9},
    {10, 0,  9,  14, 6, 3,  15, 5,  1,  13, 12, 7,  11, 4,  2,  8,
     13, 7,  0,  9,  3, 4,  6,  10, 2,  8,  5,  14, 12, 11, 15, 1,
     13, 6,  4,  9,  8, 15, 3,  0,  11, 1,  2,  12, 5,  10, 14, 7,
     1,  10, 13, 0,  6, 9,  8,  7,  4,  15, 14, 3,  11, 5,  2,  12},
    {7,  13, 14, 3, 0,  6,  9,  10, 1,  2, 8, 5,  11, 12, 4,  15,
     13, 8,  11, 5, 6,  15, 0,  3,  4,  7, 2, 12, 1,  10, 14, 9,
     10, 6,  9,  0, 12, 11, 7,  13, 15, 1, 3, 14, 5,  2,  8,  4,
     3,  15, 0,  6, 10, 1,  13, 8,  9,  4, 5, 11, 12, 7,  2,  14},
    {2,  12, 4,  1,  7,  10, 11, 6,  8,  5,  3,  15, 13, 0, 14, 9,
     14, 11, 2,  12, 4,  7,  13, 1,  5,  0,  15, 10, 3,  9, 8,  6,
     4,  2,  1,  11, 10, 13, 7,  8,  15, 9,  12, 5,  6,  3, 0,  14,
     11, 8,  12, 7,  1,  14, 2,  13, 6,  15, 0,  9,  10, 4, 5,  3},
    {12, 1,  10, 15, 9, 2,  6,  8,  0,  13, 3,  4,  14, 7,  5,  11,
     10, 15, 4,  2,  7, 12, 9,  5,  6,  1,  13, 14, 0,  11, 3,  8,
     9,  14, 15, 5,  2, 8,  12, 3,  7,  0,  4,  10, 1,  13, 11, 6,
     4,  3,  2,  12, 9, 5,  15, 10, 11, 14, 1,  7,  6,  0,  8,  13},
    {4,  11, 2,  14, 15, 0, 8,  13, 3,  12, 9, 7,  5,  10, 6,  1,
     13, 0,  11, 7,  4,  9, 1,  10, 14, 3,  5, 12, 2,  15, 8,  6,
     1,  4,  11, 13, 12, 3, 7,  14, 10, 15, 6, 8,  0,  5,  9,  2,
     6,  11, 13, 8,  1,  4, 10, 7,  9,  5,  0, 15, 14, 2,  3,  12},
    {13, 2,  8,  4, 6,  15, 11, 1,  10, 9,  3,  14, 5,  0,  12, 7,
     1,  15, 13, 8, 10, 3,  7,  4,  12, 5,  6,  11, 0,  14, 9,  2,
     7,  11, 4,  1, 9,  12, 14, 2,  0,  6,  10, 13, 15, 3,  5,  8,
     2,  1,  14, 7, 4,  10, 8,  13, 15, 12, 9,  0,  3,  5,  6,  11}};

// Gather `n` bits of `v` (an `in_width`-bit value, FIPS numbering) per table.
template <int N>
inline std::uint64_t permute(std::uint64_t v, const int (&table)[N], int in_width) {
    std::uint64_t out = 0;
    for (int i = 0; i < N; ++i)
        out = (out << 1) | ((v >> (in_width - table[i])) & 1u);
    return out;
}

inline std::uint32_t rotl28(std::uint32_t v, int n) {
    return ((v << n) | (v >> (28 - n))) & 0x0FFFFFFFu;
}

// The cipher function f(R, K): expand, mix key, S-boxes, permute.
inline std::uint32_t feistel(std::uint32_t r, std::uint64_t subkey) {
    std::uint64_t x = permute(r, E, 32) ^ subkey;
    std::uint32_t s = 0;
    for (int box = 0; box < 8; ++box) {
        unsigned six = (x >> (42 - 6 * box)) & 0x3F;
        unsigned row = ((six >> 4) & 2) | (six & 1);
        unsigned col = (six >> 1) & 0xF;
        s = (s << 4) | SBOX[box][row * 16 + col];
    }
    return static_cast<std::uint32_t>(permute(s, P, 32));
}

inline Block64 des_rounds(Block64 block, const SubkeySchedule& ks, bool decrypt) {
    std::uint64_t v = permute(block, IP, 64);
    std::uint32_t left = static_cast<std::uint32_t>(v >> 32);
    std::uint32_t right = static_cast<std::uint32_t>(v);
    for (int round = 0; round < 16; ++round) {
        std::uint64_t k = ks[decrypt ? 15 - round : round];
        std::uint32_t next = left ^ feistel(right, k);
        left = right;
        right = next;
    }
    // final swap: preoutput is R16 L16
    std::uint64_t pre = (static_cast<std::uint64_t>(right) << 32) | left;
    return permute(pre, FP, 64);
}

}  // namespace des_detail

inline SubkeySchedule key_schedule(DesKey key) {
    using namespace des_detail;
    std::uint64_t k56 = permute(key, PC1, 64);
    std::uint32_t c = static_cast<std::uint32_t>(k56 >> 28);
    std::uint32_t d = static_cast<std::uint32_t>(k56 & 0x0FFFFFFFu);
    SubkeySchedule ks{};
    for (int round = 0; round < 16; ++round) {
        c = rotl28(c, SHIFTS[round]);
        d = rotl28(d, SHIFTS[round]);
        std::uint64_t cd = (static_cast<std::uint64_t>(c) << 28) | d;
        ks[round] = permute(cd, PC2, 56);
    }
    return ks;
}

inline Block64 des_encrypt(Block64 block, const SubkeySchedule& ks) {
    return des_detail::des_rounds(block, ks, false);
}

inline Block64 des_decrypt(Block64 block, const SubkeySchedule& ks) {
    return des_detail::des_rounds(block, ks, true);
}

inline Block64 des_encrypt(Block64 block, DesKey key) {
    return des_encrypt(block, key_schedule(key));
}

inline Block64 des_decrypt(Block64 block, DesKey key) {
    return des_decrypt(block, key_schedule(key));
}

// Cached schedules for one KeySet. One context belongs to one simulator;
// rebuild whenever a key register is rewritten.
struct TdesSchedules {
    SubkeySchedule s1{}, s2{}, s3{};

    TdesSchedules() = default;
    explicit TdesSchedules(const KeySet& keys)
        : s1(key_schedule(keys.k1)), s2(key_schedule(keys.k2)), s3(key_schedule(keys.k3)) {}
};

// EDE: C = E_k3(D_k2(E_k1(P)))
inline Block64 tdes_encrypt(Block64 block, const TdesSchedules& s) {
    return des_encrypt(des_decrypt(des_encrypt(block, s.s1), s.s2), s.s3);
}

// inverse: P = D_k1(E_k2(D_k3(C)))
inline Block64 tdes_decrypt(Block64 block, const TdesSchedules& s) {
    return des_decrypt(des_encrypt(des_decrypt(block, s.s3), s.s2), s.s1);
}

inline Block64 tdes_encrypt(Block64 block, const KeySet& keys) {
    return tdes_encrypt(block, TdesSchedules(keys));
}

inline Block64 tdes_decrypt(Block64 block, const KeySet& keys) {
    return tdes_decrypt(block, TdesSchedules(keys));
}

}  // namespace emips
