#pragma once

// Slow, independent reference computations for the tests: direct orbit sums
// in extended precision, exhaustive symbol counting through the random-access
// stream interface, and small closed-form identities. Nothing here reuses the
// library's streaming accumulators, cycle shortcuts, or histograms.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ergodec/observables.hpp"
#include "ergodec/system.hpp"

namespace oracle {

inline double eval_at_point(const ergodec::FnDescriptor& d, const ergodec::AnglePoint& p) {
    switch (d.kind) {
    case ergodec::FnKind::TrigCos:
    case ergodec::FnKind::TrigSin: return ergodec::trig_value(d, p.to_double());
    case ergodec::FnKind::Arc: return ergodec::arc_contains(d.lo, d.hi, p) ? 1.0 : 0.0;
    case ergodec::FnKind::WholeSpace: return 1.0;
    default: throw std::logic_error("oracle: cylinder needs a symbol stream");
    }
}

// Direct empirical average over the first n orbit points of an angle point,
// stepping one application at a time and summing in long double.
inline double angle_average(const ergodec::SystemSpec& sys, ergodec::PointState x,
                            const ergodec::FnDescriptor& d, std::uint64_t n) {
    long double sum = 0.0L;
    for (std::uint64_t t = 0; t < n; ++t) {
        sum += eval_at_point(d, *x.get_if<ergodec::AnglePoint>());
        x = ergodec::step(sys, x);
    }
    return static_cast<double>(sum / static_cast<long double>(n));
}

// Direct cylinder-indicator average over the first n positions of a symbol
// stream, matching via random access. (Markov streams replay the chain per
// call, so keep n small for those.)
inline double stream_cylinder_average(const ergodec::SymbolStream& s,
                                      const std::vector<std::uint8_t>& word, std::uint64_t n) {
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
        bool match = true;
        for (std::size_t j = 0; j < word.size() && match; ++j) {
            match = ergodec::stream_symbol(s, t + j) == word[j];
        }
        hits += match ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

// The binary expansion value of a stream read at position t to `bits` places.
inline double stream_dyadic_value(const ergodec::SymbolStream& s, std::uint64_t t, int bits) {
    double x = 0.0;
    double scale = 0.5;
    for (int j = 0; j < bits; ++j, scale *= 0.5) {
        x += scale * static_cast<double>(ergodec::stream_symbol(s, t + j));
    }
    return x;
}

// Independent reconstruction of the alternating-block witness: block k is
// growth^k symbols long and carries 1s for even k, 0s for odd k.
inline int witness_symbol(std::uint64_t i, std::uint64_t growth) {
    std::uint64_t k = 0;
    std::uint64_t len = 1;
    while (i >= len) {
        i -= len;
        ++k;
        if (len > (std::uint64_t{1} << 62) / growth) break; // saturate like the stream
        len *= growth;
    }
    return (k % 2 == 0) ? 1 : 0;
}

// Three-sigma half-width of a binomial proportion.
inline double binom3sd(double p, double n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

// Binary entropy in bits.
inline double h2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

} // namespace oracle
