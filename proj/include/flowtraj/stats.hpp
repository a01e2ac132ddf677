#pragma once

#include <span>
#include <vector>

namespace flowtraj::stats {

double mean(std::span<const double> xs);
/// Population standard deviation.
double stddev(std::span<const double> xs);
double median(std::vector<double> xs);
/// Linear-interpolation percentile (the "type 7" definition), q in [0, 1].
double quantile(std::vector<double> xs, double q);

}  // namespace flowtraj::stats
