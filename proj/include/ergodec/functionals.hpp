#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergodec/choquet.hpp"
#include "ergodec/observables.hpp"
#include "ergodec/system.hpp"

namespace ergodec {

// Functionals that are affine in the measure argument, so their value at a
// mixture is the weight-convex combination of their values at the components:
//  - EntropyRate: tau(nu) = H_{L+1}(nu) - H_L(nu) in bits (shift measures);
//  - Linear: tau(nu) = sum_i c_i nu[f_i] over a fixed test-function family.
struct AffineFunctional {
    enum class Kind { EntropyRate, Linear };
    Kind kind = Kind::EntropyRate;
    std::uint32_t block_len = 12; // L for EntropyRate
    MomentVector coefficients;    // c for Linear, tied to a family id

    static AffineFunctional entropy_rate_functional(std::uint32_t block_len = 12);
    static AffineFunctional linear(MomentVector coefficients);
};

// Shannon entropy, in bits, of the length-L word distribution of mu.
// Requires a shift measure; throws SizeError when alphabet^L exceeds 2^24.
double block_entropy(const MeasureSpec& mu, std::uint32_t block_len);

// Entropy rate surrogate H_{L+1} - H_L in bits.
double entropy_rate(const MeasureSpec& mu, std::uint32_t block_len);

struct AffineReport {
    std::string check;
    double value_measure = 0.0;       // tau(mu)
    double value_decomposition = 0.0; // sum_k w_k tau(atom_k)
    double residual = 0.0;            // value_measure - value_decomposition, signed
    double tolerance = 0.0;
    bool pass = false;
    // EntropyRate mode: for each atom, the index of the mixture component it
    // was matched to (rho-nearest closed-form moments).
    std::vector<std::size_t> matched_component;
};

// Checks tau(mu) against the decomposition-weighted combination of tau at
// the atoms. EntropyRate evaluates components matched to atoms by moment
// distance (AtomMatchError when an atom sits farther than cluster_eps from
// every component); Linear contracts the coefficient vector with the same
// clustered moment estimate the barycenter check uses.
AffineReport verify_affine_decomposition(const MeasureSpec& mu,
                                         const DiscreteChoquetDistribution& dist,
                                         const TestFunctionFamily& fam,
                                         const AffineFunctional& functional);

} // namespace ergodec
