#pragma once

#include <span>

namespace gimbal::stats {

double mean(std::span<const double> v);
/// Population standard deviation (divides by n).
double sd(std::span<const double> v);
/// Linear interpolation between order statistics at position q * (n - 1),
/// q in [0, 1].
double percentile(std::span<const double> v, double q);

}  // namespace gimbal::stats
