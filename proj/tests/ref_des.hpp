#pragma once
// Test-only reference DES, kept independent of the production cipher:
// it works on explicit bit arrays and re-derives the schedule per call.
// Slow and simple on purpose; used to cross-check emips::des_* on
// randomized inputs.

#include <array>
#include <cstdint>
#include <vector>

namespace ref_des {

using Bits = std::vector<int>;

inline Bits to_bits(std::uint64_t v, int n) {
    Bits b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = (v >> (n - 1 - i)) & 1;
    return b;
}

inline std::uint64_t from_bits(const Bits& b) {
    std::uint64_t v = 0;
    for (int bit : b) v = (v << 1) | static_cast<unsigned>(bit);
    return v;
}

inline Bits apply(const Bits& in, const int* table, int n) {
    Bits out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(table[i] - 1)];
    return out;
}

inline const int IP[64] = {
    58, 50, 42, 34, 26, 18, 10, 2, 60, 52, 44, 36, 28, 20, 12, 4,
    62, 54, 46, 38, 30, 22, 14, 6, 64, 56, 48, 40, 32, 24, 16, 8,
    57, 49, 41, 33, 25, 17, 9,  1, 59, 51, 43, 35, 27, 19, 11, 3,
    61, 53, 45, 37, 29, 21, 13, 5, 63, 55, 47, 39, 31, 23, 15, 7};
inline const int FP[64] = {
    40, 8, 48, 16, 56, 24, 64, 32, 39, 7, 47, 15, 55, 23, 63, 31,
    38, 6, 46, 14, 54, 22, 62, 30, 37, 5, 45, 13, 53, 21, 61, 29,
    36, 4, 44, 12, 52, 20, 60, 28, 35, 3, 43, 11, 51, 19, 59, 27,
    34, 2, 42, 10, 50, 18, 58, 26, 33, 1, 41, 9,  49, 17, 57, 25};
inline const int E[48] = {32, 1,  2,  3,  4,  5,  4,  5,  6,  7,  8,  9,
                          8,  9,  10, 11, 12, 13, 12, 13, 14, 15, 16, 17,
                          16, 17, 18, 19, 20, 21, 20, 21, 22, 23, 24, 25,
                          24, 25, 26, 27, 28, 29, 28, 29, 30, 31, 32, 1};
inline const int P[32] = {16, 7, 20, 21, 29, 12, 28, 17, 1,  15, 23, 26, 5,  18, 31, 10,
                          2,  8, 24, 14, 32, 27, 3,  9,  19, 13, 30, 6,  22, 11, 4,  25};
inline const int PC1[56] = {57, 49, 41, 33, 25, 17, 9,  1,  58, 50, 42, 34, 26, 18,
                            10, 2,  59, 51, 43, 35, 27, 19, 11, 3,  60, 52, 44, 36,
                            63, 55, 47, 39, 31, 23, 15, 7,  62, 54, 46, 38, 30, 22,
                            14, 6,  61, 53, 45, 37, 29, 21, 13, 5,  28, 20, 12, 4};
inline const int PC2[48] = {14, 17, 11, 24, 1,  5,  3,  28, 15, 6,  21, 10,
                            23, 19, 12, 4,  26, 8,  16, 7,  27, 20, 13, 2,
                            41, 52, 31, 37, 47, 55, 30, 40, 51, 45, 33, 48,
                            44, 49, 39, 56, 34, 53, 46, 42, 50, 36, 29, 32};
inline const int SHIFTS[16] = {1, 1, 2, 2, 2, 2, 2, 2, 1, 2, 2, 2, 2, 2, 2, 1};
inline const int SBOX[8][4][16] = {
    {{14, 4, 13, 1, 2, 15, 11, 8, 3, 10, 6, 12, 5, 9, 0, 7},
     {0, 15, 7, 4, 14, 2, 13, 1, 10, 6, 12, 11, 9, 5, 3, 8},
     {4, 1, 14, 8, 13, 6, 2, 11, 15, 12, 9, 7, 3, 10, 5, 0},
     {15, 12, 8, 2, 4, 9, 1, 7, 5, 11, 3, 14, 10, 0, 6, 13}},
    {{15, 1, 8, 14, 6, 11, 3, 4, 9, 7, 2, 13, 12, 0, 5, 10},
     {3, 13, 4, 7, 15, 2, 8, 14, 12, 0, 1, 10, 6, 9, 11, 5},
     {0, 14, 7, 11, 10, 4, 13, 1, 5, 8, 12, 6, 9, 3, 2, 15},
     {13, 8, 10, 1, 3, 15, 4, 2, 11, 6, 7, 12, 0, 5, 14, 9}},
    {{10, 0, 9, 14, 6, 3, 15, 5, 1, 13, 12, 7, 11, 4, 2, 8},
     {13, 7, 0, 9, 3, 4, 6, 10, 2, 8, 5, 14, 12, 11, 15, 1},
     {13, 6, 4, 9, 8, 15, 3, 0, 11, 1, 2, 12, 5, 10, 14, 7},
     {1, 10, 13, 0, 6, 9, 8, 7, 4, 15, 14, 3, 11, 5, 2, 12}},
    {{7, 13, 14, 3, 0, 6, 9, 10, 1, 2, 8, 5, 11, 12, 4, 15},
     {13, 8, 11, 5, 6, 15, 0, 3, 4, 7, 2, 12, 1, 10, 14, 9},
     {10, 6, 9, 0, 12, 11, 7, 13, 15, 1, 3, 14, 5, 2, 8, 4},
     {3, 15, 0, 6, 10, 1, 13, 8, 9, 4, 5, 11, 12, 7, 2, 14}},
    {{2, 12, 4, 1, 7, 10, 11, 6, 8, 5, 3, 15, 13, 0, 14, 9},
     {14, 11, 2, 12, 4, 7, 13, 1, 5, 0, 15, 10, 3, 9, 8, 6},
     {4, 2, 1, 11, 10, 13, 7, 8, 15, 9, 12, 5, 6, 3, 0, 14},
     {11, 8, 12, 7, 1, 14, 2, 13, 6, 15, 0, 9, 10, 4, 5, 3}},
    {{12, 1, 10, 15, 9, 2, 6, 8, 0, 13, 3, 4, 14, 7, 5, 11},
     {10, 15, 4, 2, 7, 12, 9, 5, 6, 1, 13, 14, 0, 11, 3, 8},
     {9, 14, 15, 5, 2, 8, 12, 3, 7, 0, 4, 10, 1, 13, 11, 6},
     {4, 3, 2, 12, 9, 5, 15, 10, 11, 14, 1, 7, 6, 0, 8, 13}},
    {{4, 11, 2, 14, 15, 0, 8, 13, 3, 12, 9, 7, 5, 10, 6, 1},
     {13, 0, 11, 7, 4, 9, 1, 10, 14, 3, 5, 12, 2, 15, 8, 6},
     {1, 4, 11, 13, 12, 3, 7, 14, 10, 15, 6, 8, 0, 5, 9, 2},
     {6, 11, 13, 8, 1, 4, 10, 7, 9, 5, 0, 15, 14, 2, 3, 12}},
    {{13, 2, 8, 4, 6, 15, 11, 1, 10, 9, 3, 14, 5, 0, 12, 7},
     {1, 15, 13, 8, 10, 3, 7, 4, 12, 5, 6, 11, 0, 14, 9, 2},
     {7, 11, 4, 1, 9, 12, 14, 2, 0, 6, 10, 13, 15, 3, 5, 8},
     {2, 1, 14, 7, 4, 10, 8, 13, 15, 12, 9, 0, 3, 5, 6, 11}}};

inline std::array<Bits, 16> subkeys(std::uint64_t key) {
    Bits k = apply(to_bits(key, 64), PC1, 56);
    Bits c(k.begin(), k.begin() + 28), d(k.begin() + 28, k.end());
    std::array<Bits, 16> out;
    for (int r = 0; r < 16; ++r) {
        for (int s = 0; s < SHIFTS[r]; ++s) {
            c.push_back(c.front());
            c.erase(c.begin());
            d.push_back(d.front());
            d.erase(d.begin());
        }
        Bits cd = c;
        cd.insert(cd.end(), d.begin(), d.end());
        out[static_cast<std::size_t>(r)] = apply(cd, PC2, 48);
    }
    return out;
}

inline Bits f(const Bits& r, const Bits& k) {
    Bits e = apply(r, E, 48);
    for (int i = 0; i < 48; ++i)
        e[static_cast<std::size_t>(i)] ^= k[static_cast<std::size_t>(i)];
    Bits s(32);
    for (int box = 0; box < 8; ++box) {
        const int* six = &e[static_cast<std::size_t>(box * 6)];
        int row = six[0] * 2 + six[5];
        int col = six[1] * 8 + six[2] * 4 + six[3] * 2 + six[4];
        int v = SBOX[box][row][col];
        for (int i = 0; i < 4; ++i)
            s[static_cast<std::size_t>(box * 4 + i)] = (v >> (3 - i)) & 1;
    }
    return apply(s, P, 32);
}

inline std::uint64_t crypt(std::uint64_t block, std::uint64_t key, bool decrypt) {
    auto ks = subkeys(key);
    Bits v = apply(to_bits(block, 64), IP, 64);
    Bits left(v.begin(), v.begin() + 32), right(v.begin() + 32, v.end());
    for (int r = 0; r < 16; ++r) {
        Bits fr = f(right, ks[static_cast<std::size_t>(decrypt ? 15 - r : r)]);
        Bits next = left;
        for (int i = 0; i < 32; ++i)
            next[static_cast<std::size_t>(i)] ^= fr[static_cast<std::size_t>(i)];
        left = right;
        right = next;
    }
    Bits pre = right;
    pre.insert(pre.end(), left.begin(), left.end());
    return from_bits(apply(pre, FP, 64));
}

inline std::uint64_t encrypt(std::uint64_t block, std::uint64_t key) {
    return crypt(block, key, false);
}
inline std::uint64_t decrypt(std::uint64_t block, std::uint64_t key) {
    return crypt(block, key, true);
}

inline std::uint64_t ede_encrypt(std::uint64_t b, std::uint64_t k1, std::uint64_t k2,
                                 std::uint64_t k3) {
    return encrypt(decrypt(encrypt(b, k1), k2), k3);
}
inline std::uint64_t ede_decrypt(std::uint64_t b, std::uint64_t k1, std::uint64_t k2,
                                 std::uint64_t k3) {
    return decrypt(encrypt(decrypt(b, k3), k2), k1);
}

}  // namespace ref_des
