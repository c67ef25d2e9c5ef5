#include "kglab/fit.hpp"

#include <cmath>
#include <limits>

#include "kglab/error.hpp"

namespace kglab {

RegressionResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi) {
    if (x.size() != y.size()) throw Error(ErrorCode::invalid_argument, "fit input length mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= lo && x[i] <= hi && x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 3) throw Error(ErrorCode::insufficient_points, "need at least 3 positive points in window");
    double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0) throw Error(ErrorCode::insufficient_points, "degenerate abscissae");
    RegressionResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double e = ly[i] - (r.intercept + r.slope * lx[i]);
        ss += e * e;
    }
    r.residual_rms = std::sqrt(ss / n);
    r.window_lo = lo;
    r.window_hi = hi;
    r.points = static_cast<int>(lx.size());
    r.valid = true;
    return r;
}

RegressionResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    return loglog_fit(x, y, 0.0, std::numeric_limits<double>::infinity());
}

RegressionResult try_loglog_fit(const std::vector<double>& x, const std::vector<double>& y, double lo,
                                double hi) {
    try {
        return loglog_fit(x, y, lo, hi);
    } catch (const Error& e) {
        RegressionResult r;
        r.window_lo = lo;
        r.window_hi = hi;
        r.flag = e.what();
        return r;
    }
}

} // namespace kglab
