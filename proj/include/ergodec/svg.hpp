#pragma once

#include <string>
#include <vector>

#include "ergodec/basin.hpp"
#include "ergodec/choquet.hpp"

namespace ergodec {

// Bar chart of atom weights. Pure string emission; no display dependency.
std::string svg_weight_histogram(const DiscreteChoquetDistribution& dist,
                                 const std::string& title);

// Convergence traces: per point, the distance between consecutive checkpoint
// moment vectors against the checkpoint index.
std::string svg_trace_plot(const std::vector<std::string>& labels,
                           const std::vector<ConvergenceVerdict>& verdicts,
                           const std::string& title);

} // namespace ergodec
