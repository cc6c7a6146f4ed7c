#include "ergodec/basin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergodec/errors.hpp"

namespace ergodec {

std::vector<std::uint64_t> DetectorParams::checkpoints() const {
    std::vector<std::uint64_t> cps;
    cps.reserve(std::size_t(count));
    std::uint64_t n = first_n;
    for (int k = 0; k < count; ++k) {
        cps.push_back(n);
        if (k + 1 < count) {
            if (n > 1'000'000'000'000ULL / ratio)
                throw ConfigError("detector schedule overflows a sane orbit length");
            n *= ratio;
        }
    }
    return cps;
}

void DetectorParams::validate(const TestFunctionFamily& fam) const {
    if (first_n < 1) throw ConfigError("detector: first_n must be >= 1");
    if (ratio < 2) throw ConfigError("detector: ratio must be >= 2");
    if (window < 2) throw ConfigError("detector: window must be >= 2");
    if (count < window + 2)
        throw ConfigError("detector: checkpoint count must be >= window + 2");
    const double tail = family_tail_bound(fam);
    if (!(cauchy_eps > tail))
        throw ConfigError("detector: cauchy_eps must exceed the family tail bound " +
                          std::to_string(tail));
    if (!(osc_eps > 2.0 * cauchy_eps))
        throw ConfigError("detector: osc_eps must exceed 2*cauchy_eps");
}

std::string verdict_name(VerdictKind k) {
    switch (k) {
    case VerdictKind::Converged:
        return "converged";
    case VerdictKind::NotConverged:
        return "not-converged";
    case VerdictKind::Undecided:
        return "undecided";
    }
    return "?";
}

ConvergenceVerdict classify_trace(std::vector<MomentVector> trace, const DetectorParams& det) {
    if (trace.size() < std::size_t(det.window))
        throw ConfigError("classify_trace: trace shorter than the detector window");

    double stat = 0.0;
    const std::size_t begin = trace.size() - std::size_t(det.window);
    for (std::size_t i = begin; i < trace.size(); ++i)
        for (std::size_t j = i + 1; j < trace.size(); ++j)
            stat = std::max(stat, weak_metric(trace[i], trace[j]));

    ConvergenceVerdict v;
    v.limit = trace.back();
    if (stat <= det.cauchy_eps) {
        v.kind = VerdictKind::Converged;
        v.achieved_eps = stat;
        v.limit.provenance.kind = Provenance::Kind::LimitEstimate;
    } else if (stat >= det.osc_eps) {
        v.kind = VerdictKind::NotConverged;
        v.osc_lower_bound = stat;
    } else {
        v.kind = VerdictKind::Undecided;
    }
    v.trace = std::move(trace);
    return v;
}

ConvergenceVerdict classify_point_ex(const SystemSpec& sys, const PointState& x,
                                     const TestFunctionFamily& fam, const DetectorParams& det,
                                     const std::vector<FnDescriptor>& extras) {
    det.validate(fam);
    BirkhoffResult res = birkhoff_pass(sys, x, fam, det.checkpoints(), extras);
    ConvergenceVerdict v = classify_trace(std::move(res.moments), det);
    v.extra_trace = std::move(res.extras);
    return v;
}

ConvergenceVerdict classify_point(const SystemSpec& sys, const PointState& x,
                                  const TestFunctionFamily& fam, const DetectorParams& det) {
    return classify_point_ex(sys, x, fam, det, {});
}

BasinResult in_basin(const SystemSpec& sys, const PointState& x, const MomentVector& target,
                     const TestFunctionFamily& fam, const DetectorParams& det) {
    if (target.family_id != fam.id())
        throw FamilyMismatchError("in_basin: target moments use family '" + target.family_id +
                                  "', expected '" + fam.id() + "'");
    ConvergenceVerdict v = classify_point(sys, x, fam, det);
    BasinResult r;
    r.verdict = v.kind;
    r.rho = weak_metric(v.limit, target);
    r.member = v.kind == VerdictKind::Converged &&
               r.rho <= det.cauchy_eps + family_tail_bound(fam);
    return r;
}

InvarianceReport invariance_check(const SystemSpec& sys, const PointState& x,
                                  const TestFunctionFamily& fam, const DetectorParams& det) {
    InvarianceReport rep;
    rep.at_x = classify_point(sys, x, fam, det);
    rep.at_tx = classify_point(sys, step(sys, x), fam, det);
    rep.same_variant = rep.at_x.kind == rep.at_tx.kind;
    rep.pass = rep.same_variant;
    if (rep.at_x.kind == VerdictKind::Converged && rep.at_tx.kind == VerdictKind::Converged) {
        rep.rho_limits = weak_metric(rep.at_x.limit, rep.at_tx.limit);
        rep.pass = rep.same_variant && rep.rho_limits <= 2.0 * det.cauchy_eps;
    }
    return rep;
}

namespace {

// Tests whether limit's cylinder moments carry the product structure of a
// Bernoulli measure (or the path structure of the given Markov chain).
ErgodicLabel shift_label(const MomentVector& limit, const TestFunctionFamily& fam, int alphabet,
                         const std::vector<std::vector<double>>* rows, double tol) {
    std::vector<double> single(std::size_t(alphabet),
                               std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < fam.size(); ++i) {
        const auto& e = fam.entry(i);
        if (e.kind == FnKind::Cylinder && e.word.size() == 1)
            single[e.word[0]] = limit.values[i];
    }
    double total = 0.0;
    for (double v : single) {
        if (std::isnan(v)) return ErgodicLabel::Unknown; // family lacks a singleton
        total += v;
    }
    if (std::fabs(total - 1.0) > tol) return ErgodicLabel::Unknown;

    for (std::size_t i = 0; i < fam.size(); ++i) {
        const auto& e = fam.entry(i);
        if (e.kind != FnKind::Cylinder || e.word.size() < 2) continue;
        double pred = single[e.word[0]];
        for (std::size_t j = 0; j + 1 < e.word.size(); ++j)
            pred *= rows ? (*rows)[e.word[j]][e.word[j + 1]] : single[e.word[j + 1]];
        if (std::fabs(limit.values[i] - pred) > tol) return ErgodicLabel::Unknown;
    }
    return ErgodicLabel::Ergodic;
}

} // namespace

ErgodicLabel ergodic_label(const SystemSpec& sys, const MomentVector& limit,
                           const TestFunctionFamily& fam, double tol) {
    if (limit.family_id != fam.id())
        throw FamilyMismatchError("ergodic_label: limit moments use family '" +
                                  limit.family_id + "', expected '" + fam.id() + "'");
    if (sys.is<CircleRotation>() || sys.is<IdentityMap>()) {
        // Every limit of empirical measures on these systems is an ergodic
        // measure: orbit-uniform for rotations, a point mass for the identity.
        return ErgodicLabel::Ergodic;
    }
    if (sys.is<Squaring>()) {
        for (bool one : {false, true}) {
            MomentVector fixed =
                measure_moments(MeasureSpec::periodic_angles({AnglePoint{0, one}}), fam);
            if (weak_metric(limit, fixed) <= tol) return ErgodicLabel::Ergodic;
        }
        return ErgodicLabel::Unknown;
    }
    if (sys.is<FullShift>() || sys.is<DoublingViaShift>())
        return shift_label(limit, fam, sys.alphabet_size(), nullptr, tol);
    if (const auto* mk = sys.get_if<MarkovShift>())
        return shift_label(limit, fam, sys.alphabet_size(), &mk->rows, tol);
    return ErgodicLabel::Unknown;
}

} // namespace ergodec
