#pragma once

#include <span>

namespace gcnet {

// Spearman rank correlation with average ranks for ties. A constant input
// has no rank order and yields 0.
double rank_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace gcnet
