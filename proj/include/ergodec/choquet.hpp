#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergodec/basin.hpp"
#include "ergodec/observables.hpp"
#include "ergodec/system.hpp"

namespace ergodec {

// One cluster of converged limit estimates: an atom of the discrete
// approximation to the limit-map pushforward of the sampled measure.
struct ChoquetAtom {
    double weight = 0.0;
    MomentVector center;
    std::uint64_t member_count = 0;
    // Member means of the extra observables requested at decomposition time.
    std::vector<double> extra_means;
};

struct ChoquetDiagnostics {
    std::uint64_t sample_count = 0;
    std::uint64_t converged = 0;
    std::uint64_t undecided = 0;
    std::uint64_t not_converged = 0;
    double converged_frac = 0.0;
    double undecided_frac = 0.0;
    double not_converged_frac = 0.0;
    double cluster_eps = 0.0;
    double cauchy_eps = 0.0;
    // Largest single-linkage cluster diameter, the gap statistic
    // cluster_eps / max(diameter, tail), and the smallest distance between
    // atom centers (0 when fewer than two atoms).
    double max_cluster_diameter = 0.0;
    double gap_statistic = 0.0;
    double min_atom_separation = 0.0;
    bool diffuse = false;
};

// Discrete estimate of the distribution of ergodic limits. When the limits
// show no cluster gap (a continuum of ergodic measures, e.g. the identity
// map) the result is flagged diffuse and carries no atoms; the raw converged
// limits stay available either way.
struct DiscreteChoquetDistribution {
    std::vector<ChoquetAtom> atoms;
    ChoquetDiagnostics diagnostics;
    std::string family_id;
    std::vector<MomentVector> limits;              // converged limits, sample order
    std::vector<std::vector<double>> limit_extras; // parallel to limits
    std::vector<FnDescriptor> extras;              // extra observables evaluated
};

struct SampleOutcome {
    VerdictKind kind = VerdictKind::Undecided;
    MomentVector limit;         // final-checkpoint moments
    std::vector<double> extras; // final-checkpoint extra averages
    double stat = 0.0;          // achieved_eps or osc_lower_bound
};

struct ClassifiedEnsemble {
    std::vector<SampleOutcome> outcomes; // indexed by sample; order is seed-determined
    std::uint64_t converged = 0;
    std::uint64_t undecided = 0;
    std::uint64_t not_converged = 0;
};

struct EnsembleOptions {
    std::uint64_t sample_count = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0; // 0 = hardware default
    std::vector<FnDescriptor> extras;
};

// Draws sample_count points from mu (seed + sample index fixes each draw),
// classifies every orbit, and returns the outcomes in sample order. The
// result is independent of the thread count.
ClassifiedEnsemble classify_ensemble(const SystemSpec& sys, const MeasureSpec& mu,
                                     const TestFunctionFamily& fam, const DetectorParams& det,
                                     const EnsembleOptions& opts);

// Samples, classifies, and single-linkage-clusters the converged limits at
// threshold cluster_eps. Atoms are sorted by descending weight. Throws
// DecompositionFailedError when fewer than half the samples converge.
DiscreteChoquetDistribution decompose(const SystemSpec& sys, const MeasureSpec& mu,
                                      const TestFunctionFamily& fam, const DetectorParams& det,
                                      std::uint64_t sample_count, double cluster_eps,
                                      std::uint64_t seed, unsigned threads = 0,
                                      const std::vector<FnDescriptor>& extras = {});

struct ResidualEntry {
    std::string name;
    double reference = 0.0;
    double estimate = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ResidualReport {
    std::string check;
    bool pass = false;
    std::vector<ResidualEntry> entries;
};

// Barycenter identity, sampled form: closed-form mu moments against the mean
// of the converged limit estimates. Per-entry tolerance is cauchy_eps plus a
// CLT-style term 3*spread/(2*sqrt(N_converged)).
ResidualReport verify_barycenter_sampled(const SystemSpec& sys, const MeasureSpec& mu,
                                         const TestFunctionFamily& fam,
                                         const DetectorParams& det, std::uint64_t sample_count,
                                         std::uint64_t seed, unsigned threads = 0);

// Same check reusing the ensemble held by an existing decomposition (equals a
// fresh run with the decomposition's seed and sample count).
ResidualReport verify_barycenter_sampled_from(const DiscreteChoquetDistribution& dist,
                                              const MeasureSpec& mu,
                                              const TestFunctionFamily& fam);

// Entry-wise convex combination sum_k w_k * center_k of the atom centers, in
// atom order. Shared by the clustered barycenter check and by functional
// decompositions so both contract identical coordinates.
std::vector<double> clustered_moment_estimate(const DiscreteChoquetDistribution& dist);

// Barycenter identity, clustered form: mu moments against the weight-convex
// combination of atom centers. Refuses diffuse decompositions.
ResidualReport verify_barycenter_clustered(const DiscreteChoquetDistribution& dist,
                                           const MeasureSpec& mu, const TestFunctionFamily& fam);

// Bounded-Borel extension of the barycenter identity, tested on indicator
// sets (arcs, cylinder words, the whole space). The distribution must have
// been computed with these sets as extra observables. The whole-space row is
// exact and is held to 1e-12.
ResidualReport borel_extension_check(const SystemSpec& sys, const MeasureSpec& mu,
                                     const DiscreteChoquetDistribution& dist,
                                     const std::vector<FnDescriptor>& sets);

} // namespace ergodec
