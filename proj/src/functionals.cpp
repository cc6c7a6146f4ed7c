#include "ergodec/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <variant>

#include "ergodec/errors.hpp"
#include "ergodec/kahan.hpp"

namespace ergodec {

namespace {

constexpr std::uint64_t kMaxWordTable = std::uint64_t{1} << 24;

// Smallest alphabet that carries the measure's word distribution.
std::size_t measure_alphabet(const MeasureSpec& mu) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, BernoulliMeasure>) {
                return m.q.size();
            } else if constexpr (std::is_same_v<T, MarkovStationaryMeasure>) {
                return m.rows.size();
            } else if constexpr (std::is_same_v<T, PeriodicOrbitMeasure>) {
                if (m.word.empty()) {
                    throw ConfigError("entropy rate requires a shift measure, got an angle orbit");
                }
                std::uint8_t top = 0;
                for (std::uint8_t s : m.word) top = std::max(top, s);
                return static_cast<std::size_t>(top) + 1;
            } else if constexpr (std::is_same_v<T, MixtureMeasure>) {
                std::size_t a = 0;
                for (const MixtureComponent& c : m.components) {
                    a = std::max(a, measure_alphabet(*c.measure));
                }
                return a;
            } else {
                throw ConfigError("entropy rate requires a shift measure, got " +
                                  MeasureSpec(MeasureSpec::Variant(m)).describe());
            }
        },
        mu.variant());
}

std::uint64_t word_table_size(std::size_t alphabet, std::uint32_t len) {
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < len; ++i) {
        if (count > kMaxWordTable / alphabet) {
            throw SizeError("word table for the requested block length exceeds 2^24 entries");
        }
        count *= alphabet;
    }
    if (count > kMaxWordTable) {
        throw SizeError("word table for the requested block length exceeds 2^24 entries");
    }
    return count;
}

// Per-column mean and population spread of the converged limits.
void limit_column_stats(const DiscreteChoquetDistribution& dist, std::vector<double>& spread) {
    const std::size_t rows = dist.limits.size();
    const std::size_t width = rows == 0 ? 0 : dist.limits.front().values.size();
    spread.assign(width, 0.0);
    if (rows == 0) return;
    for (std::size_t j = 0; j < width; ++j) {
        KahanSum sum;
        for (std::size_t i = 0; i < rows; ++i) sum.add(dist.limits[i].values[j]);
        const double mean = sum.value() / static_cast<double>(rows);
        KahanSum sq;
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = dist.limits[i].values[j] - mean;
            sq.add(d * d);
        }
        spread[j] = std::sqrt(sq.value() / static_cast<double>(rows));
    }
}

} // namespace

AffineFunctional AffineFunctional::entropy_rate_functional(std::uint32_t block_len) {
    AffineFunctional f;
    f.kind = Kind::EntropyRate;
    f.block_len = block_len;
    return f;
}

AffineFunctional AffineFunctional::linear(MomentVector coefficients) {
    AffineFunctional f;
    f.kind = Kind::Linear;
    f.coefficients = std::move(coefficients);
    return f;
}

double block_entropy(const MeasureSpec& mu, std::uint32_t block_len) {
    if (block_len == 0) throw ConfigError("block length must be positive");
    const std::size_t alphabet = measure_alphabet(mu);
    if (alphabet == 0) throw ConfigError("measure has an empty alphabet");
    const std::uint64_t count = word_table_size(alphabet, block_len);

    std::vector<std::uint8_t> word(block_len);
    KahanSum h;
    for (std::uint64_t code = 0; code < count; ++code) {
        std::uint64_t c = code;
        for (std::uint32_t i = 0; i < block_len; ++i) {
            word[block_len - 1 - i] = static_cast<std::uint8_t>(c % alphabet);
            c /= alphabet;
        }
        const double p = closed_form_value(mu, FnDescriptor::cylinder(word));
        if (p > 0.0) h.add(-p * std::log2(p));
    }
    return h.value();
}

double entropy_rate(const MeasureSpec& mu, std::uint32_t block_len) {
    return block_entropy(mu, block_len + 1) - block_entropy(mu, block_len);
}

AffineReport verify_affine_decomposition(const MeasureSpec& mu,
                                         const DiscreteChoquetDistribution& dist,
                                         const TestFunctionFamily& fam,
                                         const AffineFunctional& functional) {
    if (fam.id() != dist.family_id) {
        throw FamilyMismatchError("distribution was built over a different test-function family");
    }
    if (dist.atoms.empty()) {
        throw ConfigError("affine decomposition checks need a non-diffuse decomposition");
    }

    AffineReport rep;
    if (functional.kind == AffineFunctional::Kind::EntropyRate) {
        rep.check = "entropy-rate";

        const auto comps = flatten_components(mu);
        std::vector<MomentVector> comp_moments;
        comp_moments.reserve(comps.size());
        for (const auto& [w, comp] : comps) {
            (void)w;
            comp_moments.push_back(measure_moments(comp, fam));
        }
        for (std::size_t k = 0; k < dist.atoms.size(); ++k) {
            std::size_t best = 0;
            double best_rho = weak_metric(dist.atoms[k].center, comp_moments[0]);
            for (std::size_t j = 1; j < comp_moments.size(); ++j) {
                const double r = weak_metric(dist.atoms[k].center, comp_moments[j]);
                if (r < best_rho) {
                    best_rho = r;
                    best = j;
                }
            }
            if (best_rho > dist.diagnostics.cluster_eps) {
                char buf[128];
                std::snprintf(buf, sizeof(buf),
                              "atom %zu lies %.4g from the nearest component, beyond %.4g", k,
                              best_rho, dist.diagnostics.cluster_eps);
                throw AtomMatchError(buf);
            }
            rep.matched_component.push_back(best);
        }

        rep.value_measure = entropy_rate(mu, functional.block_len);
        KahanSum dec;
        for (std::size_t k = 0; k < dist.atoms.size(); ++k) {
            dec.add(dist.atoms[k].weight *
                    entropy_rate(comps[rep.matched_component[k]].second, functional.block_len));
        }
        rep.value_decomposition = dec.value();
        rep.tolerance = 0.02;
    } else {
        rep.check = "linear-functional";
        const MomentVector& c = functional.coefficients;
        if (c.family_id != fam.id()) {
            throw FamilyMismatchError("coefficient vector belongs to a different family");
        }

        const std::vector<double> est = clustered_moment_estimate(dist);
        const MomentVector ref = measure_moments(mu, fam);
        KahanSum vm, vd;
        for (std::size_t i = 0; i < fam.size(); ++i) {
            vm.add(c.values[i] * ref.values[i]);
            vd.add(c.values[i] * est[i]);
        }
        rep.value_measure = vm.value();
        rep.value_decomposition = vd.value();

        std::vector<double> spread;
        limit_column_stats(dist, spread);
        const std::size_t n_conv = dist.limits.size();
        const double scale =
            (n_conv > 0) ? 3.0 / (2.0 * std::sqrt(static_cast<double>(n_conv))) : 0.0;
        KahanSum tol;
        for (std::size_t i = 0; i < fam.size(); ++i) {
            tol.add(std::abs(c.values[i]) * (dist.diagnostics.cauchy_eps + scale * spread[i]));
        }
        rep.tolerance = tol.value();
    }

    rep.residual = rep.value_measure - rep.value_decomposition;
    rep.pass = std::abs(rep.residual) <= rep.tolerance;
    return rep;
}

} // namespace ergodec
