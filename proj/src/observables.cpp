#include "ergodec/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "ergodec/errors.hpp"
#include "ergodec/kahan.hpp"
#include "ergodec/orbit.hpp"

namespace ergodec {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kMaxOrbit = 100'000'000ULL;
// Steps spent looking for an exact state recurrence before falling back to
// plain streaming. Rational rotations with power-of-two denominators,
// identity orbits and squaring orbits (which collapse onto a fixed point in
// fixed-point arithmetic) all recur well within this budget.
constexpr std::uint64_t kScanSteps = 4096;
constexpr int kProjBits = 48; // symbol-to-angle projection width

std::string format_angle(Angle64 a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", angle_to_double(a));
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Descriptors
// ---------------------------------------------------------------------------

FnDescriptor FnDescriptor::trig_cos(int k, TrigDomain d) {
    FnDescriptor f;
    f.kind = FnKind::TrigCos;
    f.domain = d;
    f.freq = k;
    return f;
}

FnDescriptor FnDescriptor::trig_sin(int k, TrigDomain d) {
    FnDescriptor f;
    f.kind = FnKind::TrigSin;
    f.domain = d;
    f.freq = k;
    return f;
}

FnDescriptor FnDescriptor::cylinder(std::vector<std::uint8_t> w) {
    FnDescriptor f;
    f.kind = FnKind::Cylinder;
    f.word = std::move(w);
    return f;
}

FnDescriptor FnDescriptor::arc(Angle64 lo, Angle64 hi) {
    FnDescriptor f;
    f.kind = FnKind::Arc;
    f.lo = lo;
    f.hi = hi;
    return f;
}

FnDescriptor FnDescriptor::whole_space() {
    return FnDescriptor{};
}

std::string FnDescriptor::label() const {
    switch (kind) {
    case FnKind::TrigCos:
        return (domain == TrigDomain::Circle ? "c" : "C") + std::to_string(freq);
    case FnKind::TrigSin:
        return (domain == TrigDomain::Circle ? "s" : "S") + std::to_string(freq);
    case FnKind::Cylinder: {
        std::string s = "[";
        for (auto sym : word) s += char('0' + sym);
        return s + "]";
    }
    case FnKind::Arc:
        return "arc[" + format_angle(lo) + "," + format_angle(hi) + ")";
    case FnKind::WholeSpace:
        return "X";
    }
    return "?";
}

double trig_value(const FnDescriptor& d, double x) {
    double arg = (d.domain == TrigDomain::Circle ? 2.0 * kPi : kPi) * d.freq * x;
    return d.kind == FnKind::TrigCos ? std::cos(arg) : std::sin(arg);
}

bool arc_contains(Angle64 lo, Angle64 hi, const AnglePoint& p) {
    if (p.one) return false; // x = 1 lies in no half-open arc [lo, hi)
    // Wrap-around subtraction puts "distance past lo" and "arc length" on the
    // same footing, so one compare handles arcs crossing 0 as well.
    return p.value - lo < hi - lo;
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

TestFunctionFamily::TestFunctionFamily(std::vector<FnDescriptor> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty() || entries_.size() > kMaxSize)
        throw ConfigError("test-function family must have 1..64 entries, got " +
                          std::to_string(entries_.size()));
    for (const auto& e : entries_) {
        switch (e.kind) {
        case FnKind::TrigCos:
        case FnKind::TrigSin:
            if (e.freq < 1) throw ConfigError("trig entry frequency must be >= 1");
            break;
        case FnKind::Cylinder:
            if (e.word.empty()) throw ConfigError("cylinder entry needs a nonempty word");
            for (auto s : e.word)
                if (s > 9) throw ConfigError("cylinder word symbol out of range");
            break;
        default:
            throw ConfigError("family entries must be trig or cylinder functions");
        }
    }
    id_.reserve(entries_.size() * 4);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i) id_ += ';';
        id_ += entries_[i].label();
    }
}

TestFunctionFamily TestFunctionFamily::circle_trig(int max_freq) {
    if (max_freq < 1 || max_freq > 32)
        throw ConfigError("circle_trig: max_freq must be in [1, 32]");
    std::vector<FnDescriptor> e;
    for (int k = 1; k <= max_freq; ++k) {
        e.push_back(FnDescriptor::trig_cos(k));
        e.push_back(FnDescriptor::trig_sin(k));
    }
    return TestFunctionFamily(std::move(e));
}

TestFunctionFamily TestFunctionFamily::interval_trig(int max_freq) {
    if (max_freq < 1 || max_freq > 32)
        throw ConfigError("interval_trig: max_freq must be in [1, 32]");
    std::vector<FnDescriptor> e;
    for (int k = 1; k <= max_freq; ++k) {
        e.push_back(FnDescriptor::trig_cos(k, TrigDomain::Interval));
        e.push_back(FnDescriptor::trig_sin(k, TrigDomain::Interval));
    }
    return TestFunctionFamily(std::move(e));
}

TestFunctionFamily TestFunctionFamily::cylinders(int alphabet, int max_len) {
    if (alphabet < 2 || alphabet > 10)
        throw ConfigError("cylinders: alphabet must be in [2, 10]");
    if (max_len < 1) throw ConfigError("cylinders: max_len must be >= 1");
    std::vector<FnDescriptor> e;
    for (int len = 1; len <= max_len; ++len) {
        std::uint64_t count = 1;
        for (int j = 0; j < len; ++j) count *= std::uint64_t(alphabet);
        for (std::uint64_t code = 0; code < count; ++code) {
            std::vector<std::uint8_t> w(static_cast<std::size_t>(len));
            std::uint64_t c = code;
            for (int j = len - 1; j >= 0; --j) {
                w[std::size_t(j)] = std::uint8_t(c % std::uint64_t(alphabet));
                c /= std::uint64_t(alphabet);
            }
            e.push_back(FnDescriptor::cylinder(std::move(w)));
        }
        if (e.size() > kMaxSize)
            throw ConfigError("cylinders: family exceeds 64 entries at word length " +
                              std::to_string(len));
    }
    return TestFunctionFamily(std::move(e));
}

TestFunctionFamily TestFunctionFamily::default_for(const SystemSpec& sys) {
    if (!sys.symbolic())
        return sys.interval_domain() ? interval_trig() : circle_trig();
    int a = sys.alphabet_size();
    int best_len = 0;
    std::uint64_t total = 0;
    for (int len = 1; len <= 4; ++len) {
        std::uint64_t count = 1;
        for (int j = 0; j < len; ++j) count *= std::uint64_t(a);
        if (total + count > kMaxSize) break;
        total += count;
        best_len = len;
    }
    return cylinders(a, best_len);
}

double TestFunctionFamily::weight(std::size_t index) {
    return std::ldexp(1.0, -int(index) - 1);
}

bool TestFunctionFamily::all_trig() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const FnDescriptor& e) {
        return e.kind == FnKind::TrigCos || e.kind == FnKind::TrigSin;
    });
}

bool TestFunctionFamily::all_cylinder() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const FnDescriptor& e) { return e.kind == FnKind::Cylinder; });
}

std::size_t TestFunctionFamily::max_word_len() const {
    std::size_t len = 0;
    for (const auto& e : entries_)
        if (e.kind == FnKind::Cylinder) len = std::max(len, e.word.size());
    return len;
}

double family_tail_bound(std::size_t m) {
    return std::ldexp(1.0, 1 - int(m));
}

double family_tail_bound(const TestFunctionFamily& fam) {
    return family_tail_bound(fam.size());
}

// ---------------------------------------------------------------------------
// Moment vectors and the weak metric
// ---------------------------------------------------------------------------

std::string Provenance::label() const {
    switch (kind) {
    case Kind::Empirical:
        return "empirical(" + std::to_string(n) + ")";
    case Kind::ClosedForm:
        return "closed-form";
    case Kind::LimitEstimate:
        return "limit-estimate(" + std::to_string(n) + ")";
    }
    return "?";
}

double weak_metric(const MomentVector& u, const MomentVector& v) {
    if (u.family_id != v.family_id)
        throw FamilyMismatchError("weak_metric: family '" + u.family_id + "' vs '" +
                                  v.family_id + "'");
    if (u.values.size() != v.values.size())
        throw FamilyMismatchError("weak_metric: moment vectors differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        sum += TestFunctionFamily::weight(i) * std::fabs(u.values[i] - v.values[i]);
    return sum;
}

// ---------------------------------------------------------------------------
// Closed-form moments
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void unsupported(const MeasureSpec& m, const FnDescriptor& d) {
    throw UnsupportedPairError("no closed form for " + m.describe() + " against " + d.label());
}

double bernoulli_word(const std::vector<double>& q, const std::vector<std::uint8_t>& w) {
    double p = 1.0;
    for (auto s : w) {
        if (s >= q.size()) throw ConfigError("cylinder word symbol out of alphabet range");
        p *= q[s];
    }
    return p;
}

double markov_word(const MarkovStationaryMeasure& m, const std::vector<std::uint8_t>& w) {
    if (w[0] >= m.stationary.size())
        throw ConfigError("cylinder word symbol out of alphabet range");
    double p = m.stationary[w[0]];
    for (std::size_t j = 0; j + 1 < w.size(); ++j) {
        if (w[j + 1] >= m.rows.size())
            throw ConfigError("cylinder word symbol out of alphabet range");
        p *= m.rows[w[j]][w[j + 1]];
    }
    return p;
}

// Mass of a dyadic-endpoint arc under a binary shift measure: the arc is a
// union of length-k cylinders read through the binary projection.
template <typename WordProb>
double dyadic_arc_mass(Angle64 lo, Angle64 hi, const MeasureSpec& m, const FnDescriptor& d,
                       WordProb&& word_prob) {
    if (lo == hi) return 0.0;
    int k = 0;
    for (int cand = 1; cand <= 20; ++cand) {
        std::uint64_t low_mask = (std::uint64_t(1) << (64 - cand)) - 1;
        if (((lo | hi) & low_mask) == 0) {
            k = cand;
            break;
        }
    }
    if (k == 0) unsupported(m, d);
    double mass = 0.0;
    std::vector<std::uint8_t> w(static_cast<std::size_t>(k));
    for (std::uint64_t code = 0; code < (std::uint64_t(1) << k); ++code) {
        if (!arc_contains(lo, hi, AnglePoint{code << (64 - k), false})) continue;
        for (int j = 0; j < k; ++j) w[std::size_t(j)] = (code >> (k - 1 - j)) & 1;
        mass += word_prob(w);
    }
    return mass;
}

struct ClosedFormVisitor {
    const MeasureSpec& m;
    const FnDescriptor& d;

    double operator()(const LebesgueCircle&) const {
        switch (d.kind) {
        case FnKind::TrigCos:
            return 0.0; // integral of a full or half-integer cosine wave over [0,1]
        case FnKind::TrigSin:
            if (d.domain == TrigDomain::Interval && d.freq % 2 == 1)
                return 2.0 / (kPi * d.freq);
            return 0.0;
        case FnKind::Arc:
            return angle_to_double(d.hi - d.lo);
        case FnKind::WholeSpace:
            return 1.0;
        default:
            unsupported(m, d);
        }
    }

    double operator()(const BernoulliMeasure& b) const {
        switch (d.kind) {
        case FnKind::Cylinder:
            return bernoulli_word(b.q, d.word);
        case FnKind::WholeSpace:
            return 1.0;
        case FnKind::Arc:
            if (b.q.size() != 2) unsupported(m, d);
            return dyadic_arc_mass(d.lo, d.hi, m, d, [&](const std::vector<std::uint8_t>& w) {
                return bernoulli_word(b.q, w);
            });
        default:
            unsupported(m, d);
        }
    }

    double operator()(const MarkovStationaryMeasure& mk) const {
        switch (d.kind) {
        case FnKind::Cylinder:
            return markov_word(mk, d.word);
        case FnKind::WholeSpace:
            return 1.0;
        case FnKind::Arc:
            if (mk.rows.size() != 2) unsupported(m, d);
            return dyadic_arc_mass(d.lo, d.hi, m, d, [&](const std::vector<std::uint8_t>& w) {
                return markov_word(mk, w);
            });
        default:
            unsupported(m, d);
        }
    }

    double operator()(const PeriodicOrbitMeasure& po) const {
        if (d.kind == FnKind::WholeSpace) return 1.0;
        if (!po.word.empty()) {
            if (d.kind != FnKind::Cylinder) unsupported(m, d);
            const auto& w = po.word;
            const std::size_t p = w.size();
            std::size_t hits = 0;
            for (std::size_t t = 0; t < p; ++t) {
                bool match = true;
                for (std::size_t j = 0; j < d.word.size() && match; ++j)
                    match = w[(t + j) % p] == d.word[j];
                hits += match;
            }
            return double(hits) / double(p);
        }
        const auto& pts = po.angles;
        const double p = double(pts.size());
        switch (d.kind) {
        case FnKind::TrigCos:
        case FnKind::TrigSin: {
            double sum = 0.0;
            for (const auto& pt : pts) sum += trig_value(d, pt.to_double());
            return sum / p;
        }
        case FnKind::Arc: {
            std::size_t hits = 0;
            for (const auto& pt : pts) hits += arc_contains(d.lo, d.hi, pt);
            return double(hits) / p;
        }
        default:
            unsupported(m, d);
        }
    }

    double operator()(const MixtureMeasure& mix) const {
        double sum = 0.0;
        for (const auto& c : mix.components) sum += c.weight * closed_form_value(*c.measure, d);
        return sum;
    }
};

} // namespace

double closed_form_value(const MeasureSpec& m, const FnDescriptor& d) {
    return std::visit(ClosedFormVisitor{m, d}, m.variant());
}

MomentVector measure_moments(const MeasureSpec& m, const TestFunctionFamily& fam) {
    MomentVector mv;
    mv.values.reserve(fam.size());
    for (const auto& e : fam.entries()) mv.values.push_back(closed_form_value(m, e));
    mv.family_id = fam.id();
    mv.provenance = {Provenance::Kind::ClosedForm, 0};
    return mv;
}

// ---------------------------------------------------------------------------
// Birkhoff engine
// ---------------------------------------------------------------------------

namespace {

// cos/sin tables for frequencies 1..max built by angle addition from the
// frequency-1 values; avoids per-entry transcendental calls.
struct TrigTables {
    int max_circle = 0;
    int max_interval = 0;
    std::vector<double> ccos, csin, icos, isin;

    void configure(const std::vector<FnDescriptor>& all) {
        for (const auto& d : all) {
            if (d.kind != FnKind::TrigCos && d.kind != FnKind::TrigSin) continue;
            auto& mx = d.domain == TrigDomain::Circle ? max_circle : max_interval;
            mx = std::max(mx, d.freq);
        }
        ccos.assign(std::size_t(max_circle) + 1, 1.0);
        csin.assign(std::size_t(max_circle) + 1, 0.0);
        icos.assign(std::size_t(max_interval) + 1, 1.0);
        isin.assign(std::size_t(max_interval) + 1, 0.0);
    }

    static void ladder(std::vector<double>& c, std::vector<double>& s, int max, double c1,
                       double s1) {
        c[1] = c1;
        s[1] = s1;
        for (int k = 2; k <= max; ++k) {
            c[std::size_t(k)] = c[std::size_t(k - 1)] * c1 - s[std::size_t(k - 1)] * s1;
            s[std::size_t(k)] = s[std::size_t(k - 1)] * c1 + c[std::size_t(k - 1)] * s1;
        }
    }

    void fill(double x) {
        if (max_circle) ladder(ccos, csin, max_circle, std::cos(2.0 * kPi * x), std::sin(2.0 * kPi * x));
        if (max_interval) ladder(icos, isin, max_interval, std::cos(kPi * x), std::sin(kPi * x));
    }

    // Circle tables from externally maintained frequency-1 values.
    void fill_circle(double c1, double s1) { ladder(ccos, csin, max_circle, c1, s1); }

    double value(const FnDescriptor& d) const {
        const bool circle = d.domain == TrigDomain::Circle;
        const auto k = std::size_t(d.freq);
        if (d.kind == FnKind::TrigCos) return circle ? ccos[k] : icos[k];
        return circle ? csin[k] : isin[k];
    }
};

void check_checkpoints(const std::vector<std::uint64_t>& cps) {
    if (cps.empty()) throw ConfigError("birkhoff pass: empty checkpoint list");
    std::uint64_t prev = 0;
    for (auto n : cps) {
        if (n <= prev) throw ConfigError("birkhoff pass: checkpoints must be strictly increasing and >= 1");
        prev = n;
    }
    if (prev > kMaxOrbit)
        throw SizeError("birkhoff pass: orbit length " + std::to_string(prev) +
                        " exceeds the supported maximum 1e8");
}

std::vector<double> divide_all(const std::vector<double>& sums, std::uint64_t n) {
    std::vector<double> out(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) out[i] = sums[i] / double(n);
    return out;
}

// --- angle-valued systems ---------------------------------------------------

std::vector<std::vector<double>> angle_path(const SystemSpec& sys, const AnglePoint& start,
                                            const std::vector<FnDescriptor>& all,
                                            const std::vector<std::uint64_t>& cps) {
    const std::size_t dim = all.size();
    for (const auto& d : all)
        if (d.kind == FnKind::Cylinder)
            throw TypeMismatchError("cylinder indicator is not defined on " + sys.describe());

    TrigTables tabs;
    tabs.configure(all);

    auto eval_into = [&](const AnglePoint& pt, std::vector<double>& out) {
        if (tabs.max_circle || tabs.max_interval) tabs.fill(pt.to_double());
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& d = all[i];
            switch (d.kind) {
            case FnKind::TrigCos:
            case FnKind::TrigSin:
                out[i] = tabs.value(d);
                break;
            case FnKind::Arc:
                out[i] = arc_contains(d.lo, d.hi, pt) ? 1.0 : 0.0;
                break;
            default:
                out[i] = 1.0; // whole space
            }
        }
    };

    std::vector<std::vector<double>> out(cps.size());
    std::vector<KahanSum> acc(dim);
    std::vector<double> vals(dim);
    std::size_t ci = 0;

    AngleCursor cur(sys, start);

    // Phase 1: walk while recording prefix sums and looking for an exact
    // state recurrence; a recurrence answers every later checkpoint in O(1).
    std::unordered_map<std::uint64_t, std::uint32_t> seen;
    seen.reserve(2 * kScanSteps);
    std::vector<std::vector<double>> prefix;
    prefix.reserve(kScanSteps + 1);
    prefix.emplace_back(dim, 0.0);

    std::uint64_t cycle_start = 0, cycle_len = 0;
    std::uint64_t t = 0;
    for (; t < kScanSteps && ci < cps.size(); ++t) {
        const AnglePoint& pt = cur.state();
        std::uint64_t key = pt.one ? pt.value ^ 0x8000000000000000ULL : pt.value;
        auto [it, inserted] = seen.emplace(key, std::uint32_t(t));
        if (!inserted) {
            cycle_start = it->second;
            cycle_len = t - cycle_start;
            break;
        }
        eval_into(pt, vals);
        std::vector<double> snap(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            acc[i].add(vals[i]);
            snap[i] = acc[i].value();
        }
        prefix.push_back(std::move(snap));
        if (cps[ci] == t + 1) out[ci++] = divide_all(prefix.back(), t + 1);
        cur.advance();
    }
    if (ci >= cps.size()) return out;

    if (cycle_len > 0) {
        // S_n = S_{s+r} + q * (S_{s+p} - S_s) with n - s = q*p + r.
        const auto& base = prefix[cycle_start];
        const auto& once = prefix[cycle_start + cycle_len];
        for (; ci < cps.size(); ++ci) {
            const std::uint64_t n = cps[ci];
            const std::uint64_t q = (n - cycle_start) / cycle_len;
            const std::uint64_t r = (n - cycle_start) % cycle_len;
            const auto& part = prefix[cycle_start + r];
            std::vector<double> sums(dim);
            for (std::size_t i = 0; i < dim; ++i)
                sums[i] = part[i] + double(q) * (once[i] - base[i]);
            out[ci] = divide_all(sums, n);
        }
        return out;
    }

    // Phase 2: plain streaming. For rotations with circle-trig entries the
    // frequency-1 phasor is advanced by one complex multiplication per step
    // (renormalized periodically) instead of calling sin/cos each time.
    seen.clear();
    prefix.clear();
    prefix.shrink_to_fit();

    const auto* rot = sys.get_if<CircleRotation>();
    const bool incremental = rot != nullptr && tabs.max_circle > 0 && tabs.max_interval == 0;
    if (incremental) {
        const double step = angle_to_double(rot->alpha);
        const double wc = std::cos(2.0 * kPi * step), ws = std::sin(2.0 * kPi * step);
        double c1 = std::cos(2.0 * kPi * cur.state().to_double());
        double s1 = std::sin(2.0 * kPi * cur.state().to_double());
        std::uint32_t renorm = 0;
        while (ci < cps.size()) {
            tabs.fill_circle(c1, s1);
            const AnglePoint& pt = cur.state();
            for (std::size_t i = 0; i < dim; ++i) {
                const auto& d = all[i];
                double v;
                switch (d.kind) {
                case FnKind::TrigCos:
                case FnKind::TrigSin:
                    v = tabs.value(d);
                    break;
                case FnKind::Arc:
                    v = arc_contains(d.lo, d.hi, pt) ? 1.0 : 0.0;
                    break;
                default:
                    v = 1.0;
                }
                acc[i].add(v);
            }
            ++t;
            if (cps[ci] == t) {
                std::vector<double> sums(dim);
                for (std::size_t i = 0; i < dim; ++i) sums[i] = acc[i].value();
                out[ci++] = divide_all(sums, t);
            }
            const double nc = c1 * wc - s1 * ws;
            s1 = s1 * wc + c1 * ws;
            c1 = nc;
            if (++renorm == 4096) {
                renorm = 0;
                const double inv = 1.0 / std::sqrt(c1 * c1 + s1 * s1);
                c1 *= inv;
                s1 *= inv;
            }
            cur.advance();
        }
        return out;
    }

    while (ci < cps.size()) {
        eval_into(cur.state(), vals);
        for (std::size_t i = 0; i < dim; ++i) acc[i].add(vals[i]);
        ++t;
        if (cps[ci] == t) {
            std::vector<double> sums(dim);
            for (std::size_t i = 0; i < dim; ++i) sums[i] = acc[i].value();
            out[ci++] = divide_all(sums, t);
        }
        cur.advance();
    }
    return out;
}

// --- shift systems ----------------------------------------------------------

struct SymbolPlan {
    std::size_t dim = 0;
    std::size_t window = 1;          // rolling window length for cylinder counting
    std::uint64_t table_size = 1;    // alphabet^window
    bool need_projection = false;    // any trig/arc entry (DoublingViaShift only)
    // Per cylinder entry: index and half-open code range inside the table.
    std::vector<std::pair<std::size_t, std::pair<std::uint64_t, std::uint64_t>>> ranges;
};

SymbolPlan make_symbol_plan(const SystemSpec& sys, const std::vector<FnDescriptor>& all) {
    SymbolPlan plan;
    plan.dim = all.size();
    const int a = sys.alphabet_size();
    const bool projectable = sys.is<DoublingViaShift>();
    for (const auto& d : all) {
        switch (d.kind) {
        case FnKind::Cylinder:
            for (auto s : d.word)
                if (int(s) >= a) throw ConfigError("cylinder word symbol out of alphabet range");
            plan.window = std::max(plan.window, d.word.size());
            break;
        case FnKind::TrigCos:
        case FnKind::TrigSin:
        case FnKind::Arc:
            if (!projectable)
                throw TypeMismatchError(d.label() + " needs an angle coordinate, which " +
                                        sys.describe() + " does not provide");
            plan.need_projection = true;
            break;
        case FnKind::WholeSpace:
            break;
        }
    }
    plan.table_size = 1;
    for (std::size_t j = 0; j < plan.window; ++j) {
        plan.table_size *= std::uint64_t(a);
        if (plan.table_size > (std::uint64_t(1) << 20))
            throw SizeError("cylinder window table exceeds 2^20 entries");
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].kind != FnKind::Cylinder) continue;
        std::uint64_t code = 0;
        for (auto s : all[i].word) code = code * std::uint64_t(a) + s;
        std::uint64_t span = 1;
        for (std::size_t j = all[i].word.size(); j < plan.window; ++j) span *= std::uint64_t(a);
        plan.ranges.emplace_back(i, std::make_pair(code * span, (code + 1) * span));
    }
    return plan;
}

// Exactly periodic content: evaluate one period directly and answer all
// checkpoints arithmetically from its prefix sums.
std::vector<std::vector<double>> symbol_periodic_path(const std::vector<FnDescriptor>& all,
                                                      SymbolSource& src, std::uint64_t period,
                                                      const std::vector<std::uint64_t>& cps) {
    const std::size_t dim = all.size();
    const std::size_t p = std::size_t(period);
    std::vector<std::uint8_t> syms(p);
    for (auto& s : syms) s = src.next();

    TrigTables tabs;
    tabs.configure(all);

    std::vector<std::vector<double>> prefix(p + 1, std::vector<double>(dim, 0.0));
    std::vector<KahanSum> acc(dim);
    for (std::size_t t = 0; t < p; ++t) {
        std::uint64_t proj = 0;
        if (tabs.max_circle || tabs.max_interval) {
            for (int j = 0; j < kProjBits; ++j)
                proj = (proj << 1) | syms[(t + std::size_t(j)) % p];
            tabs.fill(double(proj) * 0x1.0p-48);
        }
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& d = all[i];
            double v = 1.0;
            switch (d.kind) {
            case FnKind::Cylinder: {
                bool match = true;
                for (std::size_t j = 0; j < d.word.size() && match; ++j)
                    match = syms[(t + j) % p] == d.word[j];
                v = match ? 1.0 : 0.0;
                break;
            }
            case FnKind::TrigCos:
            case FnKind::TrigSin:
                v = tabs.value(d);
                break;
            case FnKind::Arc: {
                std::uint64_t proj_arc = 0;
                for (int j = 0; j < kProjBits; ++j)
                    proj_arc = (proj_arc << 1) | syms[(t + std::size_t(j)) % p];
                v = arc_contains(d.lo, d.hi, AnglePoint{proj_arc << (64 - kProjBits), false})
                        ? 1.0
                        : 0.0;
                break;
            }
            case FnKind::WholeSpace:
                break;
            }
            acc[i].add(v);
            prefix[t + 1][i] = acc[i].value();
        }
    }

    std::vector<std::vector<double>> out(cps.size());
    for (std::size_t ci = 0; ci < cps.size(); ++ci) {
        const std::uint64_t n = cps[ci];
        const std::uint64_t q = n / period;
        const std::uint64_t r = n % period;
        std::vector<double> sums(dim);
        for (std::size_t i = 0; i < dim; ++i)
            sums[i] = prefix[std::size_t(r)][i] + double(q) * prefix[p][i];
        out[ci] = divide_all(sums, n);
    }
    return out;
}

std::vector<std::vector<double>> symbol_path(const SystemSpec& sys, const SymbolStream& st,
                                             const std::vector<FnDescriptor>& all,
                                             const std::vector<std::uint64_t>& cps) {
    const SymbolPlan plan = make_symbol_plan(sys, all);
    const std::size_t dim = plan.dim;
    const int a = sys.alphabet_size();

    SymbolSource src(st, a);
    const std::uint64_t period = src.exact_period();
    if (period > 0 && period <= kScanSteps) return symbol_periodic_path(all, src, period, cps);

    std::vector<std::uint64_t> hist(plan.table_size, 0);
    std::vector<std::vector<double>> out(cps.size());

    auto emit = [&](std::size_t ci, std::uint64_t n, const std::vector<KahanSum>& trig_acc,
                    const std::vector<std::uint64_t>& arc_hits) {
        std::vector<double> row(dim, 1.0); // whole-space entries stay at 1
        for (const auto& [idx, range] : plan.ranges) {
            std::uint64_t count = 0;
            for (std::uint64_t c = range.first; c < range.second; ++c) count += hist[c];
            row[idx] = double(count) / double(n);
        }
        for (std::size_t i = 0; i < dim; ++i) {
            if (all[i].kind == FnKind::TrigCos || all[i].kind == FnKind::TrigSin)
                row[i] = trig_acc[i].value() / double(n);
            else if (all[i].kind == FnKind::Arc)
                row[i] = double(arc_hits[i]) / double(n);
        }
        out[ci] = std::move(row);
    };

    if (!plan.need_projection) {
        // Pure cylinder counting: one rolling window code per position and a
        // histogram increment; word counts fall out as code-range marginals.
        std::uint64_t code = 0;
        for (std::size_t j = 0; j + 1 < plan.window; ++j)
            code = code * std::uint64_t(a) + src.next();
        const std::vector<KahanSum> no_trig;
        const std::vector<std::uint64_t> no_arcs;
        std::uint64_t pos = 0;
        if (a == 2) {
            const std::uint64_t mask = plan.table_size - 1;
            for (std::size_t ci = 0; ci < cps.size(); ++ci) {
                const std::uint64_t n = cps[ci];
                while (pos < n) {
                    code = ((code << 1) | src.next()) & mask;
                    ++hist[code];
                    ++pos;
                }
                emit(ci, n, no_trig, no_arcs);
            }
        } else {
            for (std::size_t ci = 0; ci < cps.size(); ++ci) {
                const std::uint64_t n = cps[ci];
                while (pos < n) {
                    code = (code * std::uint64_t(a) + src.next()) % plan.table_size;
                    ++hist[code];
                    ++pos;
                }
                emit(ci, n, no_trig, no_arcs);
            }
        }
        return out;
    }

    // Projection path (binary shift-to-angle systems): positions carry both a
    // cylinder window code and a 48-bit angle read from the upcoming symbols.
    TrigTables tabs;
    tabs.configure(all);
    std::vector<KahanSum> trig_acc(dim);
    std::vector<std::uint64_t> arc_hits(dim, 0);

    constexpr std::size_t kRing = 128;
    std::uint8_t ring[kRing];
    const std::uint64_t lookahead = std::max<std::uint64_t>(plan.window, kProjBits);
    std::uint64_t reads = 0;
    for (; reads + 1 < lookahead; ++reads) ring[reads % kRing] = src.next();

    std::uint64_t code = 0;
    for (std::size_t j = 0; j + 1 < plan.window; ++j) code = (code << 1) | ring[j % kRing];
    std::uint64_t proj = 0;
    for (int j = 0; j + 1 < kProjBits; ++j) proj = (proj << 1) | ring[std::size_t(j) % kRing];

    const std::uint64_t cmask = plan.table_size - 1;
    const std::uint64_t pmask = (std::uint64_t(1) << kProjBits) - 1;
    std::uint64_t pos = 0;
    for (std::size_t ci = 0; ci < cps.size(); ++ci) {
        const std::uint64_t n = cps[ci];
        while (pos < n) {
            ring[reads % kRing] = src.next();
            ++reads;
            code = ((code << 1) | ring[(pos + plan.window - 1) % kRing]) & cmask;
            proj = ((proj << 1) | ring[(pos + kProjBits - 1) % kRing]) & pmask;
            ++hist[code];
            const AnglePoint pt{proj << (64 - kProjBits), false};
            bool filled = false;
            for (std::size_t i = 0; i < dim; ++i) {
                const auto& d = all[i];
                if (d.kind == FnKind::TrigCos || d.kind == FnKind::TrigSin) {
                    if (!filled) {
                        tabs.fill(double(proj) * 0x1.0p-48);
                        filled = true;
                    }
                    trig_acc[i].add(tabs.value(d));
                } else if (d.kind == FnKind::Arc) {
                    arc_hits[i] += arc_contains(d.lo, d.hi, pt);
                }
            }
            ++pos;
        }
        emit(ci, n, trig_acc, arc_hits);
    }
    return out;
}

} // namespace

BirkhoffResult birkhoff_pass(const SystemSpec& sys, const PointState& x,
                             const TestFunctionFamily& fam,
                             const std::vector<std::uint64_t>& checkpoints,
                             const std::vector<FnDescriptor>& extras) {
    validate_point_for_system(x, sys);
    check_checkpoints(checkpoints);

    std::vector<FnDescriptor> all = fam.entries();
    all.insert(all.end(), extras.begin(), extras.end());

    std::vector<std::vector<double>> rows;
    if (sys.symbolic())
        rows = symbol_path(sys, *x.get_if<SymbolStream>(), all, checkpoints);
    else
        rows = angle_path(sys, *x.get_if<AnglePoint>(), all, checkpoints);

    BirkhoffResult res;
    res.moments.reserve(checkpoints.size());
    res.extras.reserve(checkpoints.size());
    const std::size_t m = fam.size();
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        MomentVector mv;
        mv.values.assign(rows[ci].begin(), rows[ci].begin() + std::ptrdiff_t(m));
        mv.family_id = fam.id();
        mv.provenance = {Provenance::Kind::Empirical, checkpoints[ci]};
        res.moments.push_back(std::move(mv));
        res.extras.emplace_back(rows[ci].begin() + std::ptrdiff_t(m), rows[ci].end());
    }
    return res;
}

std::vector<MomentVector> birkhoff_moments(const SystemSpec& sys, const PointState& x,
                                           const TestFunctionFamily& fam,
                                           const std::vector<std::uint64_t>& checkpoints) {
    return birkhoff_pass(sys, x, fam, checkpoints, {}).moments;
}

} // namespace ergodec
