#include "ergodec/choquet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "ergodec/errors.hpp"
#include "ergodec/kahan.hpp"
#include "ergodec/parallel.hpp"
#include "ergodec/rng.hpp"

namespace ergodec {

namespace {

// Distance between two limit vectors from the same ensemble. Skips the
// family-id validation weak_metric performs; the ensemble guarantees it.
double rho_values(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += TestFunctionFamily::weight(i) * std::abs(a[i] - b[i]);
    }
    return d;
}

struct UnionFind {
    std::vector<std::uint32_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]]; // path halving
            x = parent[x];
        }
        return x;
    }

    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b); // keep the smallest index as root
        parent[b] = a;
    }
};

struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> spread; // population standard deviation
};

// Per-column mean and spread of rows[i][j], j < width. Two passes with
// compensated sums keep the result independent of row count rounding drift.
template <typename RowAt>
ColumnStats column_stats(std::size_t rows, std::size_t width, RowAt&& row_at) {
    ColumnStats st;
    st.mean.assign(width, 0.0);
    st.spread.assign(width, 0.0);
    if (rows == 0) return st;
    for (std::size_t j = 0; j < width; ++j) {
        KahanSum sum;
        for (std::size_t i = 0; i < rows; ++i) sum.add(row_at(i)[j]);
        st.mean[j] = sum.value() / static_cast<double>(rows);
    }
    for (std::size_t j = 0; j < width; ++j) {
        KahanSum sq;
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = row_at(i)[j] - st.mean[j];
            sq.add(d * d);
        }
        st.spread[j] = std::sqrt(sq.value() / static_cast<double>(rows));
    }
    return st;
}

ResidualReport residual_core(std::string check, const std::vector<std::string>& names,
                             const std::vector<double>& reference,
                             const std::vector<double>& estimate,
                             const std::vector<double>& tolerance) {
    ResidualReport rep;
    rep.check = std::move(check);
    rep.pass = true;
    rep.entries.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        ResidualEntry e;
        e.name = names[i];
        e.reference = reference[i];
        e.estimate = estimate[i];
        e.residual = std::abs(reference[i] - estimate[i]);
        e.tolerance = tolerance[i];
        e.pass = e.residual <= e.tolerance;
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

std::vector<double> clt_tolerances(const std::vector<double>& spread, std::size_t n_converged,
                                   double cauchy_eps) {
    std::vector<double> tol(spread.size(), cauchy_eps);
    if (n_converged == 0) return tol;
    const double scale = 3.0 / (2.0 * std::sqrt(static_cast<double>(n_converged)));
    for (std::size_t i = 0; i < spread.size(); ++i) tol[i] += scale * spread[i];
    return tol;
}

std::vector<std::string> family_labels(const TestFunctionFamily& fam) {
    std::vector<std::string> names;
    names.reserve(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i) names.push_back(fam.entry(i).label());
    return names;
}

void require_family(const DiscreteChoquetDistribution& dist, const TestFunctionFamily& fam) {
    if (dist.family_id != fam.id()) {
        throw FamilyMismatchError("distribution was built over a different test-function family");
    }
}

ResidualReport sampled_core(const std::vector<MomentVector>& limits, const MeasureSpec& mu,
                            const TestFunctionFamily& fam, double cauchy_eps) {
    const MomentVector ref = measure_moments(mu, fam);
    const std::size_t n_conv = limits.size();
    const ColumnStats st = column_stats(n_conv, fam.size(),
                                        [&](std::size_t i) -> const std::vector<double>& {
                                            return limits[i].values;
                                        });
    return residual_core("barycenter-sampled", family_labels(fam), ref.values, st.mean,
                         clt_tolerances(st.spread, n_conv, cauchy_eps));
}

} // namespace

ClassifiedEnsemble classify_ensemble(const SystemSpec& sys, const MeasureSpec& mu,
                                     const TestFunctionFamily& fam, const DetectorParams& det,
                                     const EnsembleOptions& opts) {
    validate_measure_for_system(mu, sys);
    det.validate(fam);
    if (opts.sample_count == 0) throw ConfigError("sample_count must be positive");

    ClassifiedEnsemble ens;
    ens.outcomes.resize(opts.sample_count);
    parallel_for_index(opts.sample_count, opts.threads, [&](std::uint64_t i) {
        const std::uint64_t point_seed = derive_seed(opts.seed, i);
        const PointState x = sampler_draw(mu, point_seed);
        const ConvergenceVerdict v = classify_point_ex(sys, x, fam, det, opts.extras);
        SampleOutcome& out = ens.outcomes[i];
        out.kind = v.kind;
        out.limit = v.limit;
        if (!v.extra_trace.empty()) out.extras = v.extra_trace.back();
        out.stat = (v.kind == VerdictKind::NotConverged) ? v.osc_lower_bound : v.achieved_eps;
    });
    for (const SampleOutcome& out : ens.outcomes) {
        switch (out.kind) {
        case VerdictKind::Converged: ++ens.converged; break;
        case VerdictKind::Undecided: ++ens.undecided; break;
        case VerdictKind::NotConverged: ++ens.not_converged; break;
        }
    }
    return ens;
}

DiscreteChoquetDistribution decompose(const SystemSpec& sys, const MeasureSpec& mu,
                                      const TestFunctionFamily& fam, const DetectorParams& det,
                                      std::uint64_t sample_count, double cluster_eps,
                                      std::uint64_t seed, unsigned threads,
                                      const std::vector<FnDescriptor>& extras) {
    if (!(cluster_eps > 2.0 * det.cauchy_eps)) {
        throw ConfigError("cluster_eps must exceed twice the detector cauchy_eps");
    }

    EnsembleOptions opts;
    opts.sample_count = sample_count;
    opts.seed = seed;
    opts.threads = threads;
    opts.extras = extras;
    const ClassifiedEnsemble ens = classify_ensemble(sys, mu, fam, det, opts);

    DiscreteChoquetDistribution dist;
    dist.family_id = fam.id();
    dist.extras = extras;
    ChoquetDiagnostics& dg = dist.diagnostics;
    dg.sample_count = sample_count;
    dg.converged = ens.converged;
    dg.undecided = ens.undecided;
    dg.not_converged = ens.not_converged;
    const double n = static_cast<double>(sample_count);
    dg.converged_frac = static_cast<double>(ens.converged) / n;
    dg.undecided_frac = static_cast<double>(ens.undecided) / n;
    dg.not_converged_frac = static_cast<double>(ens.not_converged) / n;
    dg.cluster_eps = cluster_eps;
    dg.cauchy_eps = det.cauchy_eps;

    if (dg.converged_frac < 0.5) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "decomposition failed: only %.1f%% of %llu sampled orbits converged",
                      100.0 * dg.converged_frac,
                      static_cast<unsigned long long>(sample_count));
        throw DecompositionFailedError(buf, dg.converged_frac, dg.undecided_frac,
                                       dg.not_converged_frac);
    }

    for (const SampleOutcome& out : ens.outcomes) {
        if (out.kind != VerdictKind::Converged) continue;
        dist.limits.push_back(out.limit);
        dist.limit_extras.push_back(out.extras);
    }
    const std::size_t n_conv = dist.limits.size();

    // Single-linkage clustering: connect every pair of limits within
    // cluster_eps and take connected components.
    UnionFind uf(n_conv);
    for (std::size_t i = 0; i < n_conv; ++i) {
        for (std::size_t j = i + 1; j < n_conv; ++j) {
            if (rho_values(dist.limits[i].values, dist.limits[j].values) <= cluster_eps) {
                uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
            }
        }
    }
    std::vector<std::uint32_t> root(n_conv);
    std::vector<std::uint32_t> roots;
    for (std::size_t i = 0; i < n_conv; ++i) {
        root[i] = uf.find(static_cast<std::uint32_t>(i));
        if (root[i] == i) roots.push_back(root[i]);
    }
    std::vector<std::vector<std::uint32_t>> members(roots.size());
    for (std::size_t k = 0; k < roots.size(); ++k) {
        for (std::size_t i = 0; i < n_conv; ++i) {
            if (root[i] == roots[k]) members[k].push_back(static_cast<std::uint32_t>(i));
        }
    }

    double max_diam = 0.0;
    for (const auto& mem : members) {
        for (std::size_t a = 0; a < mem.size(); ++a) {
            for (std::size_t b = a + 1; b < mem.size(); ++b) {
                max_diam = std::max(
                    rho_values(dist.limits[mem[a]].values, dist.limits[mem[b]].values), max_diam);
            }
        }
    }
    dg.max_cluster_diameter = max_diam;

    const double floor = std::max(max_diam, family_tail_bound(fam));
    dg.gap_statistic = (floor > 0.0) ? cluster_eps / floor
                                     : std::numeric_limits<double>::infinity();
    dg.diffuse = dg.gap_statistic < 2.0;
    if (dg.diffuse) return dist; // no atoms; the raw limits carry the mass

    const std::uint64_t final_n = det.checkpoints().back();
    for (const auto& mem : members) {
        ChoquetAtom atom;
        atom.member_count = mem.size();
        atom.weight = static_cast<double>(mem.size()) / static_cast<double>(n_conv);
        const ColumnStats cs = column_stats(mem.size(), fam.size(),
                                            [&](std::size_t i) -> const std::vector<double>& {
                                                return dist.limits[mem[i]].values;
                                            });
        atom.center = MomentVector{cs.mean, dist.family_id,
                                   Provenance{Provenance::Kind::LimitEstimate, final_n}};
        if (!extras.empty()) {
            const ColumnStats ex = column_stats(mem.size(), extras.size(),
                                                [&](std::size_t i) -> const std::vector<double>& {
                                                    return dist.limit_extras[mem[i]];
                                                });
            atom.extra_means = ex.mean;
        }
        dist.atoms.push_back(std::move(atom));
    }
    std::sort(dist.atoms.begin(), dist.atoms.end(), [](const ChoquetAtom& a, const ChoquetAtom& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.center.values < b.center.values;
    });

    double min_sep = 0.0;
    for (std::size_t a = 0; a < dist.atoms.size(); ++a) {
        for (std::size_t b = a + 1; b < dist.atoms.size(); ++b) {
            const double d = rho_values(dist.atoms[a].center.values, dist.atoms[b].center.values);
            min_sep = (min_sep == 0.0) ? d : std::min(min_sep, d);
        }
    }
    dg.min_atom_separation = min_sep;
    return dist;
}

ResidualReport verify_barycenter_sampled(const SystemSpec& sys, const MeasureSpec& mu,
                                         const TestFunctionFamily& fam,
                                         const DetectorParams& det, std::uint64_t sample_count,
                                         std::uint64_t seed, unsigned threads) {
    EnsembleOptions opts;
    opts.sample_count = sample_count;
    opts.seed = seed;
    opts.threads = threads;
    const ClassifiedEnsemble ens = classify_ensemble(sys, mu, fam, det, opts);
    const double conv_frac = static_cast<double>(ens.converged) / static_cast<double>(sample_count);
    if (conv_frac < 0.5) {
        throw DecompositionFailedError("sampled barycenter check: under half the orbits converged",
                                       conv_frac,
                                       static_cast<double>(ens.undecided) /
                                           static_cast<double>(sample_count),
                                       static_cast<double>(ens.not_converged) /
                                           static_cast<double>(sample_count));
    }
    std::vector<MomentVector> limits;
    limits.reserve(ens.converged);
    for (const SampleOutcome& out : ens.outcomes) {
        if (out.kind == VerdictKind::Converged) limits.push_back(out.limit);
    }
    return sampled_core(limits, mu, fam, det.cauchy_eps);
}

ResidualReport verify_barycenter_sampled_from(const DiscreteChoquetDistribution& dist,
                                              const MeasureSpec& mu,
                                              const TestFunctionFamily& fam) {
    require_family(dist, fam);
    return sampled_core(dist.limits, mu, fam, dist.diagnostics.cauchy_eps);
}

std::vector<double> clustered_moment_estimate(const DiscreteChoquetDistribution& dist) {
    if (dist.atoms.empty()) {
        throw ConfigError("diffuse decomposition has no atoms; use the sampled barycenter check");
    }
    const std::size_t width = dist.atoms.front().center.values.size();
    std::vector<double> est(width, 0.0);
    for (std::size_t i = 0; i < width; ++i) {
        KahanSum sum;
        for (const ChoquetAtom& atom : dist.atoms) sum.add(atom.weight * atom.center.values[i]);
        est[i] = sum.value();
    }
    return est;
}

ResidualReport verify_barycenter_clustered(const DiscreteChoquetDistribution& dist,
                                           const MeasureSpec& mu, const TestFunctionFamily& fam) {
    require_family(dist, fam);
    const std::vector<double> est = clustered_moment_estimate(dist);
    const MomentVector ref = measure_moments(mu, fam);
    const std::size_t n_conv = dist.limits.size();
    const ColumnStats st = column_stats(n_conv, fam.size(),
                                        [&](std::size_t i) -> const std::vector<double>& {
                                            return dist.limits[i].values;
                                        });
    ResidualReport rep = residual_core("barycenter-clustered", family_labels(fam), ref.values, est,
                                       clt_tolerances(st.spread, n_conv,
                                                      dist.diagnostics.cauchy_eps));
    return rep;
}

ResidualReport borel_extension_check(const SystemSpec& sys, const MeasureSpec& mu,
                                     const DiscreteChoquetDistribution& dist,
                                     const std::vector<FnDescriptor>& sets) {
    validate_measure_for_system(mu, sys);
    const std::size_t n_conv = dist.limits.size();
    const ColumnStats ex_stats = column_stats(n_conv, dist.extras.size(),
                                              [&](std::size_t i) -> const std::vector<double>& {
                                                  return dist.limit_extras[i];
                                              });

    std::vector<std::string> names;
    std::vector<double> reference, estimate, tolerance;
    for (const FnDescriptor& set : sets) {
        const auto it = std::find(dist.extras.begin(), dist.extras.end(), set);
        if (it == dist.extras.end()) {
            throw ConfigError("decomposition lacks extra observable " + set.label());
        }
        const std::size_t j = static_cast<std::size_t>(it - dist.extras.begin());

        names.push_back(set.label());
        reference.push_back(closed_form_value(mu, set));
        if (dist.diagnostics.diffuse || dist.atoms.empty()) {
            estimate.push_back(ex_stats.mean[j]);
        } else {
            KahanSum sum;
            for (const ChoquetAtom& atom : dist.atoms) sum.add(atom.weight * atom.extra_means[j]);
            estimate.push_back(sum.value());
        }
        if (set.kind == FnKind::WholeSpace) {
            tolerance.push_back(1e-12);
        } else {
            const double scale =
                (n_conv > 0) ? 3.0 / (2.0 * std::sqrt(static_cast<double>(n_conv))) : 0.0;
            tolerance.push_back(dist.diagnostics.cauchy_eps + scale * ex_stats.spread[j]);
        }
    }
    return residual_core("borel-extension", names, reference, estimate, tolerance);
}

} // namespace ergodec
