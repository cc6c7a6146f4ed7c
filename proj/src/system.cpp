#include "ergodec/system.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ergodec/rng.hpp"

namespace ergodec {

namespace {

constexpr double kStochasticTol = 1e-12;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

void validate_probability_vector(const std::vector<double>& q, const char* what) {
    if (q.size() < 2) throw ConfigError(std::string(what) + ": needs at least 2 entries");
    double sum = 0;
    for (double p : q) {
        if (!(p >= 0.0)) throw ConfigError(std::string(what) + ": negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
        throw ConfigError(std::string(what) + ": entries sum to " + format_double(sum));
}

void validate_stochastic_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ConfigError("markov matrix: empty");
    for (const auto& row : rows) {
        if (row.size() != rows.size()) throw ConfigError("markov matrix: not square");
        double sum = 0;
        for (double p : row) {
            if (!(p >= 0.0)) throw ConfigError("markov matrix: negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kStochasticTol)
            throw ConfigError("markov matrix: row sums to " + format_double(sum));
    }
}

} // namespace

// ---------------------------------------------------------------------------
// SystemSpec
// ---------------------------------------------------------------------------

SystemSpec::SystemSpec(Variant v) : v_(std::move(v)) {
    if (const auto* ms = get_if<MarkovShift>()) validate_stochastic_matrix(ms->rows);
    if (const auto* fs = get_if<FullShift>()) {
        if (fs->alphabet < 2) throw ConfigError("full shift: alphabet must be >= 2");
    }
}

SystemSpec SystemSpec::circle_rotation(Angle64 alpha) {
    return SystemSpec(Variant(CircleRotation{alpha, 0, 0}));
}

SystemSpec SystemSpec::circle_rotation_fraction(std::uint64_t p, std::uint64_t q) {
    if (q == 0) throw ConfigError("circle rotation: zero denominator");
    return SystemSpec(Variant(CircleRotation{fraction_to_angle(p, q), p % q, q}));
}

SystemSpec SystemSpec::golden_rotation() { return circle_rotation(kGoldenAngle); }

SystemSpec SystemSpec::full_shift(int alphabet) { return SystemSpec(Variant(FullShift{alphabet})); }

SystemSpec SystemSpec::markov_shift(std::vector<std::vector<double>> rows) {
    return SystemSpec(Variant(MarkovShift{std::move(rows)}));
}

SystemSpec SystemSpec::squaring() { return SystemSpec(Variant(Squaring{})); }
SystemSpec SystemSpec::identity() { return SystemSpec(Variant(IdentityMap{})); }
SystemSpec SystemSpec::doubling_via_shift() { return SystemSpec(Variant(DoublingViaShift{})); }

int SystemSpec::alphabet_size() const {
    if (const auto* fs = get_if<FullShift>()) return fs->alphabet;
    if (const auto* ms = get_if<MarkovShift>()) return int(ms->rows.size());
    if (is<DoublingViaShift>()) return 2;
    return 0;
}

std::string SystemSpec::describe() const {
    struct Visitor {
        std::string operator()(const CircleRotation& r) const {
            if (r.den != 0)
                return "circle_rotation(" + std::to_string(r.num) + "/" + std::to_string(r.den) + ")";
            return "circle_rotation(" + format_double(angle_to_double(r.alpha)) + ")";
        }
        std::string operator()(const FullShift& s) const {
            return "full_shift(" + std::to_string(s.alphabet) + ")";
        }
        std::string operator()(const MarkovShift& s) const {
            return "markov_shift(" + std::to_string(s.rows.size()) + " states)";
        }
        std::string operator()(const Squaring&) const { return "squaring"; }
        std::string operator()(const IdentityMap&) const { return "identity"; }
        std::string operator()(const DoublingViaShift&) const { return "doubling_via_shift"; }
    };
    return std::visit(Visitor{}, v_);
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

std::string PointState::describe() const {
    if (const auto* a = get_if<AnglePoint>()) {
        return "angle(" + format_double(a->to_double()) + ")";
    }
    const auto& s = *get_if<SymbolStream>();
    std::string out = "stream(";
    for (std::uint64_t i = 0; i < 8; ++i) out += char('0' + stream_symbol(s, i));
    out += "...)";
    return out;
}

std::uint8_t stream_symbol(const SymbolStream& s, std::uint64_t i) {
    std::uint64_t raw = i + s.offset;
    if (raw < s.prefix.size()) return s.prefix[raw];
    std::uint64_t j = raw - s.prefix.size();
    switch (s.gen.kind) {
    case GeneratorKind::Periodic: {
        const auto& w = s.gen.word.empty() ? s.prefix : s.gen.word;
        if (w.empty()) throw ConfigError("periodic stream: empty word and prefix");
        return w[j % w.size()];
    }
    case GeneratorKind::Iid:
        return std::uint8_t(iid_symbol_at(s.gen.seed, j, s.gen.q));
    case GeneratorKind::Markov: {
        // Sequential replay; fine for spot access, orbit traversal uses
        // SymbolSource.
        SplitMix rng(s.gen.seed);
        const auto& init = s.gen.init;
        int state = 0;
        {
            double u = rng.next_unit();
            double acc = 0;
            for (std::size_t k = 0; k + 1 < init.size(); ++k) {
                acc += init[k];
                if (u < acc) { state = int(k); goto first_done; }
            }
            state = int(init.size()) - 1;
        }
    first_done:
        for (std::uint64_t t = 0; t < j; ++t) {
            double u = rng.next_unit();
            double acc = 0;
            const auto& row = s.gen.rows[std::size_t(state)];
            int nxt = int(row.size()) - 1;
            for (std::size_t k = 0; k + 1 < row.size(); ++k) {
                acc += row[k];
                if (u < acc) { nxt = int(k); break; }
            }
            state = nxt;
        }
        return std::uint8_t(state);
    }
    case GeneratorKind::BlockSchedule: {
        // Blocks k = 1, 2, ...: length growth^k, symbol 0 for odd k, 1 for
        // even k.
        std::uint64_t g = s.gen.block_growth;
        std::uint64_t len = g;
        std::uint64_t k = 1;
        std::uint64_t pos = j;
        while (pos >= len) {
            pos -= len;
            ++k;
            if (len > (std::uint64_t(1) << 62) / g) return k % 2 == 0 ? 1 : 0; // saturated
            len *= g;
        }
        return k % 2 == 0 ? 1 : 0;
    }
    }
    throw Error("stream_symbol: unreachable");
}

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

MeasureSpec::MeasureSpec(Variant v) : v_(std::move(v)) {
    if (const auto* b = get_if<BernoulliMeasure>()) validate_probability_vector(b->q, "bernoulli q");
    if (const auto* mk = get_if<MarkovStationaryMeasure>()) {
        validate_stochastic_matrix(mk->rows);
        if (mk->stationary.size() != mk->rows.size())
            throw ConfigError("markov measure: stationary vector size mismatch");
        // pi P = pi within tolerance
        for (std::size_t j = 0; j < mk->rows.size(); ++j) {
            double s = 0;
            for (std::size_t i = 0; i < mk->rows.size(); ++i) s += mk->stationary[i] * mk->rows[i][j];
            if (std::abs(s - mk->stationary[j]) > 1e-9)
                throw ConfigError("markov measure: vector is not stationary");
        }
    }
    if (const auto* po = get_if<PeriodicOrbitMeasure>()) {
        if (po->word.empty() == po->angles.empty())
            throw ConfigError("periodic orbit: exactly one of word/angles must be given");
    }
    if (const auto* mx = get_if<MixtureMeasure>()) {
        if (mx->components.empty()) throw ConfigError("mixture: no components");
        double sum = 0;
        for (const auto& c : mx->components) {
            if (!(c.weight > 0.0)) throw ConfigError("mixture: weights must be positive");
            if (!c.measure) throw ConfigError("mixture: null component");
            sum += c.weight;
        }
        if (std::abs(sum - 1.0) > kStochasticTol)
            throw ConfigError("mixture: weights sum to " + format_double(sum));
    }
}

MeasureSpec MeasureSpec::lebesgue() { return MeasureSpec(Variant(LebesgueCircle{})); }

MeasureSpec MeasureSpec::bernoulli(std::vector<double> q) {
    return MeasureSpec(Variant(BernoulliMeasure{std::move(q)}));
}

MeasureSpec MeasureSpec::markov_stationary(std::vector<std::vector<double>> rows,
                                           std::vector<double> stationary) {
    if (stationary.empty()) stationary = stationary_distribution(rows);
    return MeasureSpec(Variant(MarkovStationaryMeasure{std::move(rows), std::move(stationary)}));
}

MeasureSpec MeasureSpec::periodic_word(std::vector<std::uint8_t> word) {
    if (word.empty()) throw ConfigError("periodic orbit: empty word");
    return MeasureSpec(Variant(PeriodicOrbitMeasure{std::move(word), {}}));
}

MeasureSpec MeasureSpec::periodic_angles(std::vector<AnglePoint> angles) {
    if (angles.empty()) throw ConfigError("periodic orbit: empty angle list");
    return MeasureSpec(Variant(PeriodicOrbitMeasure{{}, std::move(angles)}));
}

MeasureSpec MeasureSpec::mixture(std::vector<std::pair<double, MeasureSpec>> components) {
    MixtureMeasure mx;
    mx.components.reserve(components.size());
    for (auto& [w, m] : components)
        mx.components.push_back({w, std::make_shared<const MeasureSpec>(std::move(m))});
    return MeasureSpec(Variant(std::move(mx)));
}

std::string MeasureSpec::describe() const {
    struct Visitor {
        std::string operator()(const LebesgueCircle&) const { return "lebesgue"; }
        std::string operator()(const BernoulliMeasure& b) const {
            std::string out = "bernoulli(";
            for (std::size_t i = 0; i < b.q.size(); ++i)
                out += (i ? "," : "") + format_double(b.q[i]);
            return out + ")";
        }
        std::string operator()(const MarkovStationaryMeasure& m) const {
            return "markov_stationary(" + std::to_string(m.rows.size()) + " states)";
        }
        std::string operator()(const PeriodicOrbitMeasure& p) const {
            if (!p.word.empty()) {
                std::string out = "periodic_orbit(word=";
                for (auto s : p.word) out += char('0' + s);
                return out + ")";
            }
            std::string out = "periodic_orbit(angles=";
            for (std::size_t i = 0; i < p.angles.size(); ++i)
                out += (i ? "," : "") + format_double(p.angles[i].to_double());
            return out + ")";
        }
        std::string operator()(const MixtureMeasure& mx) const {
            std::string out = "mixture(";
            for (std::size_t i = 0; i < mx.components.size(); ++i) {
                if (i) out += ", ";
                out += format_double(mx.components[i].weight) + ":" +
                       mx.components[i].measure->describe();
            }
            return out + ")";
        }
    };
    return std::visit(Visitor{}, v_);
}

std::vector<std::pair<double, MeasureSpec>> flatten_components(const MeasureSpec& m) {
    std::vector<std::pair<double, MeasureSpec>> out;
    if (const auto* mx = m.get_if<MixtureMeasure>()) {
        for (const auto& c : mx->components) {
            for (auto& [w, sub] : flatten_components(*c.measure))
                out.emplace_back(c.weight * w, std::move(sub));
        }
    } else {
        out.emplace_back(1.0, m);
    }
    return out;
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& rows) {
    validate_stochastic_matrix(rows);
    std::size_t n = rows.size();
    // Solve pi (P - I) = 0 with sum(pi) = 1: transpose system, replace the
    // last equation by the normalization row. Gaussian elimination with
    // partial pivoting; matrices here are small.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) a[j][i] = rows[i][j] - (i == j ? 1.0 : 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) a[n - 1][i] = 1.0;
    a[n - 1][n] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-14) throw ConfigError("markov matrix: reducible chain");
        std::swap(a[piv], a[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
    return pi;
}

// ---------------------------------------------------------------------------
// Registration checks
// ---------------------------------------------------------------------------

namespace {

void validate_symbols(const std::vector<std::uint8_t>& syms, int alphabet, const char* what) {
    for (auto s : syms)
        if (int(s) >= alphabet)
            throw ConfigError(std::string(what) + ": symbol out of range for alphabet " +
                              std::to_string(alphabet));
}

} // namespace

void validate_point_for_system(const PointState& p, const SystemSpec& sys) {
    if (sys.symbolic()) {
        const auto* s = p.get_if<SymbolStream>();
        if (!s)
            throw TypeMismatchError("point " + p.describe() + " is not a symbol stream for " +
                                    sys.describe());
        int a = sys.alphabet_size();
        validate_symbols(s->prefix, a, "stream prefix");
        switch (s->gen.kind) {
        case GeneratorKind::Periodic:
            validate_symbols(s->gen.word, a, "periodic word");
            if (s->gen.word.empty() && s->prefix.empty())
                throw ConfigError("periodic stream: empty word and prefix");
            break;
        case GeneratorKind::Iid:
            if (int(s->gen.q.size()) != a)
                throw ConfigError("iid generator: q size != alphabet");
            break;
        case GeneratorKind::Markov:
            if (int(s->gen.rows.size()) != a)
                throw ConfigError("markov generator: matrix size != alphabet");
            break;
        case GeneratorKind::BlockSchedule:
            if (a != 2) throw ConfigError("block-schedule stream requires a binary alphabet");
            if (s->gen.block_growth < 2) throw ConfigError("block schedule: growth must be >= 2");
            break;
        }
    } else {
        const auto* a = p.get_if<AnglePoint>();
        if (!a)
            throw TypeMismatchError("point " + p.describe() + " is not an angle for " +
                                    sys.describe());
        if (a->one && !sys.interval_domain())
            throw ConfigError("angle 1 is only a point of interval systems; circle angles lie in [0,1)");
    }
}

namespace {

void validate_angle_orbit(const std::vector<AnglePoint>& angles, const SystemSpec& sys) {
    // The list must be exactly one T-orbit in order.
    for (std::size_t i = 0; i < angles.size(); ++i) {
        PointState cur = PointState(PointState::Variant(angles[i]));
        validate_point_for_system(cur, sys);
        PointState nxt = step(sys, cur);
        const AnglePoint& want = angles[(i + 1) % angles.size()];
        if (!(*nxt.get_if<AnglePoint>() == want))
            throw ConfigError("periodic orbit: angle list is not a closed T-orbit of " +
                              sys.describe());
    }
}

} // namespace

void validate_measure_for_system(const MeasureSpec& m, const SystemSpec& sys) {
    struct Visitor {
        const SystemSpec& sys;
        void operator()(const LebesgueCircle&) const {
            if (!(sys.is<CircleRotation>() || sys.is<IdentityMap>()))
                throw ConfigError("lebesgue is not invariant for " + sys.describe());
        }
        void operator()(const BernoulliMeasure& b) const {
            bool ok = (sys.is<FullShift>() && int(b.q.size()) == sys.alphabet_size()) ||
                      (sys.is<DoublingViaShift>() && b.q.size() == 2);
            if (!ok)
                throw ConfigError("bernoulli measure is only registered for matching full shifts, got " +
                                  sys.describe());
        }
        void operator()(const MarkovStationaryMeasure& mk) const {
            bool ok = sys.symbolic() && int(mk.rows.size()) == sys.alphabet_size();
            if (!ok)
                throw ConfigError("markov measure needs a shift system with matching alphabet, got " +
                                  sys.describe());
        }
        void operator()(const PeriodicOrbitMeasure& po) const {
            if (!po.word.empty()) {
                if (!sys.symbolic())
                    throw ConfigError("periodic word orbit needs a shift system, got " + sys.describe());
                validate_symbols(po.word, sys.alphabet_size(), "periodic orbit word");
            } else {
                if (sys.symbolic())
                    throw ConfigError("periodic angle orbit needs an angle system, got " + sys.describe());
                validate_angle_orbit(po.angles, sys);
            }
        }
        void operator()(const MixtureMeasure& mx) const {
            for (const auto& c : mx.components) validate_measure_for_system(*c.measure, sys);
        }
    };
    std::visit(Visitor{sys}, m.variant());
}

// ---------------------------------------------------------------------------
// step / sampler_draw / oscillating_witness
// ---------------------------------------------------------------------------

PointState step(const SystemSpec& sys, const PointState& p) {
    validate_point_for_system(p, sys);
    if (sys.symbolic()) {
        SymbolStream s = *p.get_if<SymbolStream>();
        s.offset += 1;
        return PointState::stream(std::move(s));
    }
    AnglePoint a = *p.get_if<AnglePoint>();
    if (const auto* rot = sys.get_if<CircleRotation>()) {
        a.value += rot->alpha; // exact mod-1 wrap
        return PointState(PointState::Variant(a));
    }
    if (sys.is<Squaring>()) {
        if (!a.one) {
            unsigned __int128 sq = (unsigned __int128)a.value * a.value;
            a.value = Angle64(sq >> 64);
        }
        return PointState(PointState::Variant(a));
    }
    // IdentityMap
    return PointState(PointState::Variant(a));
}

namespace {

PointState draw_impl(const MeasureSpec& m, std::uint64_t seed, int* label, int depth) {
    struct Visitor {
        std::uint64_t seed;
        int* label;
        int depth;

        PointState operator()(const LebesgueCircle&) const {
            SplitMix rng(seed);
            return PointState::angle(rng.next_u64());
        }
        PointState operator()(const BernoulliMeasure& b) const {
            SymbolStream s;
            s.gen.kind = GeneratorKind::Iid;
            s.gen.q = b.q;
            s.gen.seed = seed;
            return PointState::stream(std::move(s));
        }
        PointState operator()(const MarkovStationaryMeasure& mk) const {
            SymbolStream s;
            s.gen.kind = GeneratorKind::Markov;
            s.gen.rows = mk.rows;
            s.gen.init = mk.stationary;
            s.gen.seed = seed;
            return PointState::stream(std::move(s));
        }
        PointState operator()(const PeriodicOrbitMeasure& po) const {
            SplitMix rng(seed);
            if (!po.word.empty()) {
                // Uniformly rotated start phase.
                std::size_t n = po.word.size();
                std::size_t r = std::size_t(rng.next_u64() % n);
                std::vector<std::uint8_t> rotated(n);
                for (std::size_t i = 0; i < n; ++i) rotated[i] = po.word[(i + r) % n];
                SymbolStream s;
                s.gen.kind = GeneratorKind::Periodic;
                s.gen.word = std::move(rotated);
                return PointState::stream(std::move(s));
            }
            std::size_t r = std::size_t(rng.next_u64() % po.angles.size());
            return PointState(PointState::Variant(po.angles[r]));
        }
        PointState operator()(const MixtureMeasure& mx) const {
            SplitMix rng(seed);
            double u = rng.next_unit();
            double acc = 0;
            std::size_t pick = mx.components.size() - 1;
            for (std::size_t i = 0; i + 1 < mx.components.size(); ++i) {
                acc += mx.components[i].weight;
                if (u < acc) { pick = i; break; }
            }
            if (label && depth == 0) *label = int(pick);
            return draw_impl(*mx.components[pick].measure, rng.next_u64(), label, depth + 1);
        }
    };
    return std::visit(Visitor{seed, label, depth}, m.variant());
}

} // namespace

PointState sampler_draw(const MeasureSpec& m, std::uint64_t seed) {
    return draw_impl(m, seed, nullptr, 0);
}

PointState sampler_draw_labeled(const MeasureSpec& m, std::uint64_t seed, int* label) {
    if (label) *label = 0;
    return draw_impl(m, seed, label, 0);
}

PointState oscillating_witness(std::uint64_t block_growth) {
    if (block_growth < 2) throw ConfigError("oscillating_witness: block_growth must be >= 2");
    SymbolStream s;
    s.gen.kind = GeneratorKind::BlockSchedule;
    s.gen.block_growth = block_growth;
    return PointState::stream(std::move(s));
}

} // namespace ergodec
