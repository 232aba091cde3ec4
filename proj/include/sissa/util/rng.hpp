#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sissa {

// 64-bit FNV-1a. Used for stage-seed derivation and file content hashes.
inline uint64_t fnv1a64(const void* data, size_t len,
                        uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s,
                        uint64_t h = 1469598103934665603ull) {
    return fnv1a64(s.data(), s.size(), h);
}

// Stable stage seed: hash(global_seed, stage_name, index). Keeps parallel
// stages reproducible without sharing one RNG stream.
inline uint64_t derive_seed(uint64_t global, std::string_view stage,
                            uint64_t index = 0) {
    uint64_t h = fnv1a64(&global, sizeof(global));
    h = fnv1a64(stage, h);
    h = fnv1a64(&index, sizeof(index), h);
    return h ? h : 0x9E3779B97F4A7C15ull;
}

// mt19937_64 engine with self-contained real distributions so that the
// produced sequences are identical on every platform (std:: distribution
// algorithms are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    // Unbiased integer in [0, n), rejection sampled.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    uint64_t range(uint64_t lo, uint64_t hi_inclusive) {
        return lo + below(hi_inclusive - lo + 1);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 eng_;
};

// Fisher-Yates with Rng::below; std::shuffle would not be reproducible
// across standard library implementations.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct indices drawn from [0, n), in random order.
inline std::vector<size_t> sample_indices(size_t n, size_t k, Rng& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx, rng);
    if (k < n) idx.resize(k);
    return idx;
}

}  // namespace sissa
