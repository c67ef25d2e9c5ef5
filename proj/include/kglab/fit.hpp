#pragma once

#include <string>
#include <vector>

namespace kglab {

struct RegressionResult {
    double slope = 0;
    double intercept = 0;
    double residual_rms = 0;
    double window_lo = 0;
    double window_hi = 0;
    int points = 0;
    bool valid = false;
    std::string flag;
};

// Least squares of log y on log x using points with x in [lo, hi] and y > 0.
// Throws insufficient_points when fewer than three remain.
RegressionResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi);
RegressionResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y);
// Same, but reports an invalid result with a flag instead of throwing.
RegressionResult try_loglog_fit(const std::vector<double>& x, const std::vector<double>& y, double lo,
                                double hi);

} // namespace kglab
