#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergodec/fixed64.hpp"
#include "ergodec/system.hpp"

namespace ergodec {

// ---------------------------------------------------------------------------
// Function descriptors. Families hold trig and cylinder entries; arcs and the
// whole-space indicator appear as extra observables riding along a Birkhoff
// pass (Borel set checks) and in closed-form measure evaluation.
// ---------------------------------------------------------------------------

enum class FnKind { TrigCos, TrigSin, Cylinder, Arc, WholeSpace };

// Circle trig uses cos/sin(2*pi*k*x); interval trig uses cos/sin(pi*k*x),
// which separates the endpoints 0 and 1 of interval systems.
enum class TrigDomain { Circle, Interval };

struct FnDescriptor {
    FnKind kind = FnKind::WholeSpace;
    TrigDomain domain = TrigDomain::Circle;
    int freq = 0;                  // trig
    std::vector<std::uint8_t> word; // cylinder
    Angle64 lo = 0, hi = 0;        // arc [lo, hi), half-open, may wrap past 1

    static FnDescriptor trig_cos(int k, TrigDomain d = TrigDomain::Circle);
    static FnDescriptor trig_sin(int k, TrigDomain d = TrigDomain::Circle);
    static FnDescriptor cylinder(std::vector<std::uint8_t> w);
    static FnDescriptor arc(Angle64 lo, Angle64 hi);
    static FnDescriptor whole_space();

    // Compact stable label, e.g. "c2", "S1", "[011]", "arc[0.25,0.5)", "X".
    std::string label() const;

    bool operator==(const FnDescriptor&) const = default;
};

// Trig entry evaluated at x in [0, 1].
double trig_value(const FnDescriptor& d, double x);

// Membership of an angle point in the half-open arc [lo, hi); arcs wrap
// modulo 1, lo == hi is empty (use WholeSpace for the full circle). The
// interval endpoint x = 1 lies in no half-open arc.
bool arc_contains(Angle64 lo, Angle64 hi, const AnglePoint& p);

// ---------------------------------------------------------------------------
// Test-function family: f_1..f_m with weights w_i = 2^{-i}. The metric value
// depends on the entry order, so the order is part of the identity string.
// ---------------------------------------------------------------------------

class TestFunctionFamily {
public:
    static constexpr std::size_t kMaxSize = 64;

    explicit TestFunctionFamily(std::vector<FnDescriptor> entries);

    // cos/sin pairs for frequencies 1..max_freq.
    static TestFunctionFamily circle_trig(int max_freq = 8);
    static TestFunctionFamily interval_trig(int max_freq = 8);
    // All cylinder words of length 1..max_len in length-then-lex order.
    static TestFunctionFamily cylinders(int alphabet, int max_len = 4);
    // Circle trig for rotations/identity, interval trig for the squaring
    // map, cylinders for shifts (max_len trimmed to fit 64 entries).
    static TestFunctionFamily default_for(const SystemSpec& sys);

    std::size_t size() const { return entries_.size(); }
    const FnDescriptor& entry(std::size_t i) const { return entries_[i]; }
    const std::vector<FnDescriptor>& entries() const { return entries_; }
    const std::string& id() const { return id_; }

    // w_i = 2^{-i} with 1-based i; argument is the 0-based entry index.
    static double weight(std::size_t index);

    bool all_trig() const;
    bool all_cylinder() const;
    std::size_t max_word_len() const;

private:
    std::vector<FnDescriptor> entries_;
    std::string id_;
};

// Truncating the metric series at m entries changes it by at most 2^{1-m}.
double family_tail_bound(const TestFunctionFamily& fam);
double family_tail_bound(std::size_t m);

// ---------------------------------------------------------------------------
// Moment vectors: a measure seen through a family.
// ---------------------------------------------------------------------------

struct Provenance {
    enum class Kind { Empirical, ClosedForm, LimitEstimate };
    Kind kind = Kind::Empirical;
    std::uint64_t n = 0; // orbit length for Empirical/LimitEstimate

    std::string label() const;
};

struct MomentVector {
    std::vector<double> values;
    std::string family_id;
    Provenance provenance;
};

// rho(u, v) = sum_i 2^{-i} |u_i - v_i|; requires matching families.
double weak_metric(const MomentVector& u, const MomentVector& v);

// ---------------------------------------------------------------------------
// Streaming Birkhoff averages: one pass over the orbit of x, emitting the
// empirical-measure moments at each checkpoint. Extra observables (arcs,
// cylinder words, whole space) are averaged in the same pass.
// ---------------------------------------------------------------------------

struct BirkhoffResult {
    std::vector<MomentVector> moments;      // one per checkpoint
    std::vector<std::vector<double>> extras; // [checkpoint][extra index]
};

BirkhoffResult birkhoff_pass(const SystemSpec& sys, const PointState& x,
                             const TestFunctionFamily& fam,
                             const std::vector<std::uint64_t>& checkpoints,
                             const std::vector<FnDescriptor>& extras);

std::vector<MomentVector> birkhoff_moments(const SystemSpec& sys, const PointState& x,
                                           const TestFunctionFamily& fam,
                                           const std::vector<std::uint64_t>& checkpoints);

// ---------------------------------------------------------------------------
// Closed-form moments of registered measures.
// ---------------------------------------------------------------------------

// Exact value of the integral of the descriptor under m. Supported pairs:
// trig against Lebesgue and periodic angle orbits; cylinders against
// Bernoulli, Markov, periodic words; arcs against Lebesgue, periodic angle
// orbits, and dyadic-endpoint arcs against binary Bernoulli/Markov; the
// whole space against everything; mixtures distribute over components.
double closed_form_value(const MeasureSpec& m, const FnDescriptor& d);

MomentVector measure_moments(const MeasureSpec& m, const TestFunctionFamily& fam);

} // namespace ergodec
