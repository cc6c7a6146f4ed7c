#pragma once

#include <cstdint>
#include <vector>

namespace ergodec {

// splitmix64 finalizer. Used both as a standalone counter-based generator and
// to derive per-sample seeds from a master seed. Fixed constants, so streams
// are identical across platforms.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Per-sample seed: master seed plus sample index, counter scheme. Independent
// of how work is distributed over threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ (0xD1B54A32D192ED03ULL * (index + 1)));
}

// Small sequential generator for sampler internals. State advances by the
// splitmix64 increment; output is the finalizer of the state.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0,1) with 53 random bits. No std::uniform_real_distribution
    // because its output is implementation-defined.
    double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Index into a probability vector by inverse CDF.
    int next_discrete(const std::vector<double>& probs) {
        double u = next_unit();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return int(i);
        }
        return int(probs.size()) - 1;
    }

private:
    std::uint64_t state_;
};

// Stateless draw: symbol distributed per q at stream position `index` for a
// given seed. Gives O(1) random access into an iid symbol stream.
inline int iid_symbol_at(std::uint64_t seed, std::uint64_t index, const std::vector<double>& q) {
    std::uint64_t h = splitmix64(seed ^ (0x2545F4914F6CDD1DULL * (index + 1)));
    double u = double(h >> 11) * 0x1.0p-53;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        acc += q[i];
        if (u < acc) return int(i);
    }
    return int(q.size()) - 1;
}

} // namespace ergodec
