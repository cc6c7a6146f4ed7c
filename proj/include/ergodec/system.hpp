#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ergodec/errors.hpp"
#include "ergodec/fixed64.hpp"

namespace ergodec {

// ---------------------------------------------------------------------------
// Systems. Each variant is a compact system (X, T) with known structure.
// ---------------------------------------------------------------------------

struct CircleRotation {
    Angle64 alpha = 0;
    // Exact fraction when the rotation was registered rationally (q == 0
    // otherwise). alpha is the nearest 64-bit fixed-point value either way;
    // single steps add alpha mod 1 exactly.
    std::uint64_t num = 0;
    std::uint64_t den = 0;
};

struct FullShift {
    int alphabet = 2;
};

struct MarkovShift {
    std::vector<std::vector<double>> rows; // row-stochastic
};

// T(x) = x^2 on the interval [0,1]. The endpoints are distinct fixed points,
// so this system uses the interval test-function family.
struct Squaring {};

struct IdentityMap {};

// Binary full shift projected to [0,1). The map is the shift on symbols; the
// angle coordinate is read off through a 48-bit sliding window, never by
// floating multiplication by 2.
struct DoublingViaShift {};

class SystemSpec {
public:
    using Variant = std::variant<CircleRotation, FullShift, MarkovShift, Squaring, IdentityMap,
                                 DoublingViaShift>;

    SystemSpec() : v_(IdentityMap{}) {}
    explicit SystemSpec(Variant v);

    static SystemSpec circle_rotation(Angle64 alpha);
    static SystemSpec circle_rotation_fraction(std::uint64_t p, std::uint64_t q);
    static SystemSpec golden_rotation();
    static SystemSpec full_shift(int alphabet);
    static SystemSpec markov_shift(std::vector<std::vector<double>> rows);
    static SystemSpec squaring();
    static SystemSpec identity();
    static SystemSpec doubling_via_shift();

    const Variant& variant() const { return v_; }

    template <typename T> const T* get_if() const { return std::get_if<T>(&v_); }
    template <typename T> bool is() const { return std::holds_alternative<T>(v_); }

    // 0 for angle-valued systems.
    int alphabet_size() const;
    bool symbolic() const { return alphabet_size() > 0; }
    // Interval systems keep x = 0 and x = 1 distinct.
    bool interval_domain() const { return is<Squaring>(); }

    std::string describe() const;

private:
    Variant v_;
};

// ---------------------------------------------------------------------------
// Points. A point either carries a circle/interval coordinate or a symbol
// stream with a deterministic extension rule.
// ---------------------------------------------------------------------------

// Interval systems need the right endpoint: `one` marks x = 1 exactly.
// Circle systems normalize 1 to 0 on construction.
struct AnglePoint {
    Angle64 value = 0;
    bool one = false;

    bool operator==(const AnglePoint&) const = default;
    double to_double() const { return one ? 1.0 : angle_to_double(value); }
};

enum class GeneratorKind { Periodic, Iid, Markov, BlockSchedule };

struct SymbolGenerator {
    GeneratorKind kind = GeneratorKind::Periodic;
    std::vector<std::uint8_t> word;        // Periodic; empty means "repeat the prefix"
    std::vector<double> q;                 // Iid
    std::vector<std::vector<double>> rows; // Markov
    std::vector<double> init;              // Markov start distribution
    std::uint64_t seed = 0;                // Iid, Markov
    std::uint64_t block_growth = 0;        // BlockSchedule

    bool operator==(const SymbolGenerator&) const = default;
};

struct SymbolStream {
    std::vector<std::uint8_t> prefix;
    SymbolGenerator gen;
    // Symbols dropped from the front by shift steps. Content index i maps to
    // raw index i + offset over prefix-then-generator.
    std::uint64_t offset = 0;

    bool operator==(const SymbolStream&) const = default;
};

class PointState {
public:
    using Variant = std::variant<AnglePoint, SymbolStream>;

    PointState() : v_(AnglePoint{}) {}
    explicit PointState(Variant v) : v_(std::move(v)) {}
    static PointState angle(Angle64 a) { return PointState(Variant(AnglePoint{a, false})); }
    static PointState angle_one() { return PointState(Variant(AnglePoint{0, true})); }
    static PointState stream(SymbolStream s) { return PointState(Variant(std::move(s))); }

    const Variant& variant() const { return v_; }
    template <typename T> const T* get_if() const { return std::get_if<T>(&v_); }
    template <typename T> bool is() const { return std::holds_alternative<T>(v_); }

    bool operator==(const PointState&) const = default;

    std::string describe() const;

private:
    Variant v_;
};

// Raw symbol of a stream at content index i (after the stream's offset).
// Markov streams are generated sequentially, so random access replays the
// chain; use SymbolSource for orbit-scale traversal.
std::uint8_t stream_symbol(const SymbolStream& s, std::uint64_t i);

// ---------------------------------------------------------------------------
// Measures. Every non-mixture variant is ergodic for the systems it may be
// registered against; mixtures model non-ergodic invariant measures.
// ---------------------------------------------------------------------------

class MeasureSpec;

struct LebesgueCircle {};

struct BernoulliMeasure {
    std::vector<double> q;
};

struct MarkovStationaryMeasure {
    std::vector<std::vector<double>> rows;
    std::vector<double> stationary;
};

struct PeriodicOrbitMeasure {
    // Exactly one of the two is populated.
    std::vector<std::uint8_t> word; // shift systems
    std::vector<AnglePoint> angles; // circle/interval systems, in orbit order
};

struct MixtureComponent {
    double weight = 0;
    std::shared_ptr<const MeasureSpec> measure;
};

struct MixtureMeasure {
    std::vector<MixtureComponent> components;
};

class MeasureSpec {
public:
    using Variant = std::variant<LebesgueCircle, BernoulliMeasure, MarkovStationaryMeasure,
                                 PeriodicOrbitMeasure, MixtureMeasure>;

    MeasureSpec() : v_(LebesgueCircle{}) {}
    explicit MeasureSpec(Variant v);

    static MeasureSpec lebesgue();
    static MeasureSpec bernoulli(std::vector<double> q);
    // Computes the stationary vector when not supplied.
    static MeasureSpec markov_stationary(std::vector<std::vector<double>> rows,
                                         std::vector<double> stationary = {});
    static MeasureSpec periodic_word(std::vector<std::uint8_t> word);
    static MeasureSpec periodic_angles(std::vector<AnglePoint> angles);
    static MeasureSpec mixture(std::vector<std::pair<double, MeasureSpec>> components);

    const Variant& variant() const { return v_; }
    template <typename T> const T* get_if() const { return std::get_if<T>(&v_); }
    template <typename T> bool is() const { return std::holds_alternative<T>(v_); }

    std::string describe() const;

private:
    Variant v_;
};

// Flattens nested mixtures into (weight, ergodic component) pairs.
std::vector<std::pair<double, MeasureSpec>> flatten_components(const MeasureSpec& m);

// Registration check: the measure must be invariant for the system by
// construction (Bernoulli only for binary-compatible shifts, Lebesgue only
// for rotations/identity, periodic angle lists must close into one T-orbit).
void validate_measure_for_system(const MeasureSpec& m, const SystemSpec& sys);

// Point/system compatibility (variant kind, symbol range, generator shape).
void validate_point_for_system(const PointState& p, const SystemSpec& sys);

// Row-stochastic check (1e-12) plus stationary solve via Gaussian
// elimination.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& rows);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Applies T once.
PointState step(const SystemSpec& sys, const PointState& p);

// A point distributed per m; deterministic in seed.
PointState sampler_draw(const MeasureSpec& m, std::uint64_t seed);

// Same, reporting the top-level mixture component that was drawn (0 for
// non-mixtures). The label is the test oracle for decomposition weights.
PointState sampler_draw_labeled(const MeasureSpec& m, std::uint64_t seed, int* label);

// Explicit member of X2 for the binary full shift: alternating blocks of 0s
// and 1s with lengths growth^k, so the running frequency of 1 oscillates
// between about 1/(1+growth) and growth/(1+growth) forever.
PointState oscillating_witness(std::uint64_t block_growth);

} // namespace ergodec
