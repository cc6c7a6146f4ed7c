#pragma once

#include <cstdint>
#include <vector>

#include "ergodec/rng.hpp"
#include "ergodec/system.hpp"

namespace ergodec {

// Sequential symbol producer over prefix-then-generator content, starting at
// the stream's offset. Symbols are generated lazily in chunks of 4096 so
// orbits up to 1e8 stay memory-bounded.
class SymbolSource {
public:
    static constexpr std::size_t kChunk = 4096;

    SymbolSource(const SymbolStream& s, int alphabet);

    std::uint8_t next() {
        if (pos_ == filled_) refill();
        return buf_[pos_++];
    }

    // Exact period of the whole content stream, or 0 when unknown. Only
    // periodic generators whose prefix is consistent with the cycle report
    // a period.
    std::uint64_t exact_period() const { return exact_period_; }

private:
    void refill();

    const SymbolStream stream_;
    int alphabet_;
    std::uint64_t abs_ = 0; // next raw index to generate (offset applied)
    std::size_t pos_ = 0;
    std::size_t filled_ = 0;
    std::vector<std::uint8_t> buf_;
    std::uint64_t exact_period_ = 0;

    // Markov chain state: markov_state_ always holds the symbol at the next
    // unread generator index, markov_rng_ the draw stream behind it.
    SplitMix markov_rng_;
    int markov_state_ = 0;

    // Block schedule state.
    std::uint64_t block_k_ = 1;
    std::uint64_t block_len_ = 0;
    std::uint64_t block_pos_ = 0;
};

// Orbit walker for angle systems. advance() applies T once; the state is
// exact 64-bit fixed point, so period detection is an integer comparison.
class AngleCursor {
public:
    AngleCursor(const SystemSpec& sys, const AnglePoint& start);

    const AnglePoint& state() const { return cur_; }
    void advance();

private:
    enum class Kind { Rotation, Squaring, Identity } kind_;
    Angle64 alpha_ = 0;
    AnglePoint cur_;
};

} // namespace ergodec
