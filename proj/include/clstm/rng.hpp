#pragma once

#include <cstdint>
#include <vector>

#include "clstm/errors.hpp"
#include "clstm/matrix.hpp"

namespace clstm {

// xorshift64* with a splitmix64-scrambled seed. Small, explicit, and
// bit-identical across platforms, which is what the reproducibility tests
// lean on. Single-owner: not safe to share across threads.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) {
        state = splitmix64(seed);
        if (state == 0) state = 0x9E3779B97F4A7C15ULL;
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t next_u64() {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        return state * 0x2545F4914F6CDD1DULL;
    }

    // Uniform double in [0, 1), 53 mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        if (lo > hi) throw ArgumentError("uniform: lo > hi");
        return lo + next_double() * (hi - lo);
    }

    // Integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Independent child stream, deterministic given this stream's state.
    Rng split() { return Rng(next_u64()); }
};

template <typename T>
Matrix<T> rng_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols) {
    if (lo > hi) throw ArgumentError("rng_uniform: lo > hi");
    Matrix<T> m(rows, cols);
    for (auto& v : m.data) v = static_cast<T>(rng.uniform(lo, hi));
    return m;
}

// In-place Fisher-Yates shuffle, seed-deterministic.
template <typename V>
void shuffle(std::vector<V>& items, Rng& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(items[i], items[j]);
    }
}

}  // namespace clstm
