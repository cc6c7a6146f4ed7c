#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergodec/observables.hpp"
#include "ergodec/system.hpp"

namespace ergodec {

// Geometric checkpoint schedule plus the thresholds that turn a finite trace
// of empirical moments into a convergence verdict.
struct DetectorParams {
    std::uint64_t first_n = 1000;
    std::uint64_t ratio = 2;
    int count = 12;
    int window = 3;
    double cauchy_eps = 5e-3;
    double osc_eps = 3e-2;

    std::vector<std::uint64_t> checkpoints() const;

    // cauchy_eps must exceed the family's truncation tail, osc_eps must
    // exceed 2*cauchy_eps, and the schedule must outlast the window.
    void validate(const TestFunctionFamily& fam) const;
};

enum class VerdictKind { Converged, NotConverged, Undecided };

std::string verdict_name(VerdictKind k);

struct ConvergenceVerdict {
    VerdictKind kind = VerdictKind::Undecided;
    // Final-checkpoint moments; the limit estimate when kind == Converged.
    MomentVector limit;
    double achieved_eps = 0.0;     // Converged: max pairwise rho in the window
    double osc_lower_bound = 0.0;  // NotConverged: the same statistic
    std::vector<MomentVector> trace;
    std::vector<std::vector<double>> extra_trace; // parallel to trace
};

// Verdict from an existing checkpoint trace (no orbit work). The statistic is
// the maximum pairwise rho over the trailing `window` checkpoints.
ConvergenceVerdict classify_trace(std::vector<MomentVector> trace, const DetectorParams& det);

// Streams the orbit over det's schedule and classifies the endpoint behavior.
ConvergenceVerdict classify_point(const SystemSpec& sys, const PointState& x,
                                  const TestFunctionFamily& fam, const DetectorParams& det);

// Same, with extra observables averaged alongside the family.
ConvergenceVerdict classify_point_ex(const SystemSpec& sys, const PointState& x,
                                     const TestFunctionFamily& fam, const DetectorParams& det,
                                     const std::vector<FnDescriptor>& extras);

struct BasinResult {
    bool member = false;
    double rho = 0.0; // distance from the limit (or final checkpoint) to the target
    VerdictKind verdict = VerdictKind::Undecided;
};

// x is in the basin of the target when its empirical measures converge and
// the limit estimate sits within cauchy_eps + tail of the target moments.
BasinResult in_basin(const SystemSpec& sys, const PointState& x, const MomentVector& target,
                     const TestFunctionFamily& fam, const DetectorParams& det);

struct InvarianceReport {
    ConvergenceVerdict at_x;
    ConvergenceVerdict at_tx;
    bool same_variant = false;
    double rho_limits = 0.0; // when both converged
    bool pass = false;
};

// Classifies x and T(x); empirical-measure limits are invariant under one
// application of the map, so the verdicts must agree and converged limits
// must sit within 2*cauchy_eps of each other.
InvarianceReport invariance_check(const SystemSpec& sys, const PointState& x,
                                  const TestFunctionFamily& fam, const DetectorParams& det);

enum class ErgodicLabel { Ergodic, Unknown };

// Labels a converged limit using registered knowledge of the system's ergodic
// set: rotations and the identity have only ergodic limit candidates, the
// squaring map's are the two endpoint Diracs, and shift limits are checked
// against the product (Bernoulli) or stationary-chain (Markov) structure of
// their cylinder moments. Anything else stays Unknown.
ErgodicLabel ergodic_label(const SystemSpec& sys, const MomentVector& limit,
                           const TestFunctionFamily& fam, double tol);

} // namespace ergodec
