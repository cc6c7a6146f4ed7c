#include "ergodec/orbit.hpp"

#include "ergodec/rng.hpp"

namespace ergodec {

namespace {

// A periodic stream is exactly periodic with the word length iff the prefix
// agrees with the cyclic continuation (checked over the finite prefix).
std::uint64_t periodic_stream_period(const SymbolStream& s) {
    if (s.gen.kind != GeneratorKind::Periodic) return 0;
    const auto& w = s.gen.word.empty() ? s.prefix : s.gen.word;
    if (w.empty()) return 0;
    std::uint64_t p = w.size();
    for (std::uint64_t i = 0; i < s.prefix.size(); ++i) {
        if (stream_symbol(s, i) != stream_symbol(s, i + p)) return 0;
    }
    return p;
}

int draw_from(SplitMix& rng, const std::vector<double>& probs) {
    double u = rng.next_unit();
    double acc = 0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return int(k);
    }
    return int(probs.size()) - 1;
}

} // namespace

SymbolSource::SymbolSource(const SymbolStream& s, int alphabet)
    : stream_(s), alphabet_(alphabet), abs_(s.offset), buf_(kChunk), markov_rng_(0) {
    (void)alphabet_;
    exact_period_ = periodic_stream_period(s);

    const std::uint64_t pfx = s.prefix.size();
    const std::uint64_t j0 = abs_ > pfx ? abs_ - pfx : 0;

    if (s.gen.kind == GeneratorKind::Markov) {
        // Same draw sequence as stream_symbol: one draw for the initial
        // state, one per transition. Fast-forward to generator index j0.
        markov_rng_ = SplitMix(s.gen.seed);
        markov_state_ = draw_from(markov_rng_, s.gen.init);
        for (std::uint64_t t = 0; t < j0; ++t)
            markov_state_ = draw_from(markov_rng_, s.gen.rows[std::size_t(markov_state_)]);
    } else if (s.gen.kind == GeneratorKind::BlockSchedule) {
        block_len_ = s.gen.block_growth;
        std::uint64_t skip = j0;
        while (skip >= block_len_ - block_pos_) {
            skip -= block_len_ - block_pos_;
            block_pos_ = 0;
            ++block_k_;
            if (block_len_ <= (std::uint64_t(1) << 62) / s.gen.block_growth)
                block_len_ *= s.gen.block_growth;
        }
        block_pos_ += skip;
    }
}

void SymbolSource::refill() {
    const auto& st = stream_;
    std::size_t count = 0;
    const std::uint64_t pfx = st.prefix.size();

    while (count < kChunk && abs_ + count < pfx) {
        buf_[count] = st.prefix[abs_ + count];
        ++count;
    }
    if (count == kChunk) {
        abs_ += count;
        filled_ = count;
        pos_ = 0;
        return;
    }

    std::uint64_t j = abs_ + count - pfx; // generator index of the next symbol

    switch (st.gen.kind) {
    case GeneratorKind::Periodic: {
        const auto& w = st.gen.word.empty() ? st.prefix : st.gen.word;
        const std::size_t n = w.size();
        std::size_t phase = std::size_t(j % n);
        while (count < kChunk) {
            buf_[count++] = w[phase];
            if (++phase == n) phase = 0;
        }
        break;
    }
    case GeneratorKind::Iid: {
        const auto& q = st.gen.q;
        if (q.size() == 2) {
            // Binary fast path: one hash per symbol, threshold on 53 bits.
            const double q0 = q[0];
            const std::uint64_t seed = st.gen.seed;
            for (; count < kChunk; ++j) {
                std::uint64_t h = splitmix64(seed ^ (0x2545F4914F6CDD1DULL * (j + 1)));
                buf_[count++] = (double(h >> 11) * 0x1.0p-53 < q0) ? 0 : 1;
            }
        } else {
            for (; count < kChunk; ++j)
                buf_[count++] = std::uint8_t(iid_symbol_at(st.gen.seed, j, q));
        }
        break;
    }
    case GeneratorKind::Markov: {
        // markov_state_ always holds the symbol at the next generator index.
        while (count < kChunk) {
            buf_[count++] = std::uint8_t(markov_state_);
            markov_state_ = draw_from(markov_rng_, st.gen.rows[std::size_t(markov_state_)]);
        }
        break;
    }
    case GeneratorKind::BlockSchedule: {
        const std::uint64_t g = st.gen.block_growth;
        while (count < kChunk) {
            if (block_pos_ == block_len_) {
                block_pos_ = 0;
                ++block_k_;
                if (block_len_ <= (std::uint64_t(1) << 62) / g) block_len_ *= g;
                // else saturate; a block this long outlives any orbit
            }
            buf_[count++] = block_k_ % 2 == 0 ? 1 : 0;
            ++block_pos_;
        }
        break;
    }
    }

    abs_ += count;
    filled_ = count;
    pos_ = 0;
}

AngleCursor::AngleCursor(const SystemSpec& sys, const AnglePoint& start) : cur_(start) {
    if (const auto* rot = sys.get_if<CircleRotation>()) {
        kind_ = Kind::Rotation;
        alpha_ = rot->alpha;
    } else if (sys.is<Squaring>()) {
        kind_ = Kind::Squaring;
    } else if (sys.is<IdentityMap>()) {
        kind_ = Kind::Identity;
    } else {
        throw TypeMismatchError("AngleCursor: " + sys.describe() + " is not an angle system");
    }
}

void AngleCursor::advance() {
    switch (kind_) {
    case Kind::Rotation:
        cur_.value += alpha_;
        break;
    case Kind::Squaring:
        if (!cur_.one) {
            unsigned __int128 sq = (unsigned __int128)cur_.value * cur_.value;
            cur_.value = Angle64(sq >> 64);
        }
        break;
    case Kind::Identity:
        break;
    }
}

} // namespace ergodec
