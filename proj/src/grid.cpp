#include "kglab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>

namespace kglab {

const char* error_code_name(ErrorCode c) {
    switch (c) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_interval: return "invalid_interval";
    case ErrorCode::out_of_band: return "out_of_band";
    case ErrorCode::wraparound: return "wraparound";
    case ErrorCode::excluded_endpoint: return "excluded_endpoint";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::interval_too_large: return "interval_too_large";
    case ErrorCode::insufficient_points: return "insufficient_points";
    case ErrorCode::coverage_gap: return "coverage_gap";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

TorusGrid::TorusGrid(int d_, int n_, double L_) : d(d_), n(n_), L(L_) { validate(); }

void TorusGrid::validate() const {
    if (d < 1) throw Error(ErrorCode::invalid_argument, "dimension must be >= 1");
    if (n < 2 || !std::has_single_bit(static_cast<unsigned>(n)))
        throw Error(ErrorCode::invalid_argument, "points per axis must be a power of two");
    if (!(L > 0) || !std::isfinite(L)) throw Error(ErrorCode::invalid_argument, "extent must be positive");
    if (dxi() > 0.25 + 1e-15)
        throw Error(ErrorCode::invalid_argument, "frequency spacing exceeds 1/4 (need L >= 8 pi)");
}

double TorusGrid::cell_volume() const { return std::pow(dx(), d); }

std::size_t TorusGrid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
    return s;
}

void TorusGrid::unravel(std::size_t flat, int* idx) const {
    for (int a = d - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat % n);
        flat /= n;
    }
}

void TorusGrid::require_band(double kmax) const {
    if (!(kmax < nyquist()))
        throw Error(ErrorCode::out_of_band, "frequency " + std::to_string(kmax) + " not below Nyquist " +
                                                std::to_string(nyquist()));
}

template <class T>
Field<T>::Field(const TorusGrid& g, std::vector<T> data) : grid(g), v(std::move(data)) {
    if (v.size() != g.size()) throw Error(ErrorCode::invalid_argument, "sample count does not match grid");
}

template <class T>
Field<T>& Field<T>::operator+=(const Field& o) {
    if (!(grid == o.grid)) throw Error(ErrorCode::invalid_argument, "grid mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
}

template <class T>
Field<T>& Field<T>::operator-=(const Field& o) {
    if (!(grid == o.grid)) throw Error(ErrorCode::invalid_argument, "grid mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
}

template <class T>
Field<T>& Field<T>::operator*=(double a) {
    for (auto& x : v) x *= a;
    return *this;
}

template struct Field<double>;
template struct Field<cplx>;

StatePair::StatePair(RealField u_, RealField ut_) : u(std::move(u_)), ut(std::move(ut_)) {
    if (!(u.grid == ut.grid)) throw Error(ErrorCode::invalid_argument, "state components on different grids");
}

RealField real_part(const ComplexField& f) {
    RealField r(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
    return r;
}

ComplexField complexify(const RealField& f) {
    ComplexField c(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) c[i] = f[i];
    return c;
}

RealField sample(const TorusGrid& g, const std::function<double(const double* x)>& fn) {
    RealField f(g);
    std::vector<int> idx(g.d);
    std::vector<double> x(g.d);
    for (std::size_t i = 0; i < f.size(); ++i) {
        g.unravel(i, idx.data());
        for (int a = 0; a < g.d; ++a) x[a] = g.coord(idx[a]);
        f[i] = fn(x.data());
    }
    return f;
}

namespace {

struct PlanCache {
    std::mutex mu;
    std::map<std::tuple<int, int, int>, fftw_plan> plans;

    fftw_plan get(int d, int n, int sign) {
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(d, n, sign);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        std::vector<int> dims(d, n);
        std::size_t total = 1;
        for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);
        auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
        fftw_plan p = fftw_plan_dft(d, dims.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans.emplace(key, p);
        return p;
    }
};

PlanCache& plan_cache() {
    static PlanCache c;
    return c;
}

void fft_inplace(const TorusGrid& g, std::vector<cplx>& data, int sign) {
    fftw_plan p = plan_cache().get(g.d, g.n, sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
}

// (-1)^{sum of indices}: the shift from x_0 = -L/2.
void checkerboard(const TorusGrid& g, std::vector<cplx>& data, double scale) {
    std::vector<int> idx(g.d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        g.unravel(i, idx.data());
        int parity = 0;
        for (int a = 0; a < g.d; ++a) parity += idx[a];
        data[i] *= (parity & 1) ? -scale : scale;
    }
}

} // namespace

SpectralField forward_transform(const ComplexField& f) {
    SpectralField s(f.grid);
    s.c = f.v;
    fft_inplace(f.grid, s.c, FFTW_FORWARD);
    checkerboard(f.grid, s.c, f.grid.cell_volume());
    return s;
}

SpectralField forward_transform(const RealField& f) { return forward_transform(complexify(f)); }

ComplexField inverse_transform(const SpectralField& s) {
    ComplexField f(s.grid);
    f.v = s.c;
    checkerboard(s.grid, f.v, 1.0 / std::pow(s.grid.L, s.grid.d));
    fft_inplace(s.grid, f.v, FFTW_BACKWARD);
    return f;
}

RealField inverse_real(const SpectralField& s) { return real_part(inverse_transform(s)); }

void apply_multiplier(SpectralField& s, const std::function<cplx(const double* xi)>& m) {
    const auto& g = s.grid;
    std::vector<int> idx(g.d);
    std::vector<double> xi(g.d);
    for (std::size_t i = 0; i < s.size(); ++i) {
        g.unravel(i, idx.data());
        for (int a = 0; a < g.d; ++a) xi[a] = g.freq(idx[a]);
        s.c[i] *= m(xi.data());
    }
}

void apply_real_multiplier(SpectralField& s, const std::function<double(const double* xi)>& m) {
    apply_multiplier(s, [&](const double* xi) { return cplx(m(xi), 0.0); });
}

std::vector<double> frequency_norm2(const TorusGrid& g) {
    std::vector<double> axis(g.n);
    for (int i = 0; i < g.n; ++i) axis[i] = g.freq(i) * g.freq(i);
    std::vector<double> out(g.size());
    std::vector<int> idx(g.d);
    for (std::size_t i = 0; i < out.size(); ++i) {
        g.unravel(i, idx.data());
        double s = 0;
        for (int a = 0; a < g.d; ++a) s += axis[idx[a]];
        out[i] = s;
    }
    return out;
}

namespace {

template <class T>
double lp_impl(const Field<T>& f, double p) {
    if (!(p >= 1)) throw Error(ErrorCode::invalid_argument, "Lebesgue exponent must be >= 1");
    if (std::isinf(p)) {
        double m = 0;
        for (const auto& x : f.v) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0;
    for (const auto& x : f.v) s += std::pow(std::abs(x), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

} // namespace

double lp_norm(const RealField& f, double p) { return lp_impl(f, p); }
double lp_norm(const ComplexField& f, double p) { return lp_impl(f, p); }

double spectral_l2_norm(const SpectralField& s) { return sobolev_norm(s, 0.0); }

double sobolev_norm(const SpectralField& sf, double s) {
    const auto& g = sf.grid;
    auto n2 = frequency_norm2(g);
    double acc = 0;
    for (std::size_t i = 0; i < sf.size(); ++i) acc += std::pow(1.0 + n2[i], s) * std::norm(sf.c[i]);
    return std::sqrt(acc * std::pow(g.dxi() / (2.0 * kPi), g.d));
}

double sobolev_norm(const RealField& f, double s) { return sobolev_norm(forward_transform(f), s); }

double mixed_norm_profile(const std::vector<double>& t, const std::vector<double>& lr, double q, double a,
                          double b) {
    if (t.size() != lr.size()) throw Error(ErrorCode::invalid_argument, "profile length mismatch");
    if (!(b > a)) throw Error(ErrorCode::invalid_interval, "empty time window");
    if (t.empty() || t.front() > a + 1e-12 * std::max(1.0, std::abs(a)) ||
        t.back() < b - 1e-12 * std::max(1.0, std::abs(b)))
        throw Error(ErrorCode::invalid_interval, "trajectory does not cover the time window");
    if (!(q >= 1)) throw Error(ErrorCode::invalid_argument, "time exponent must be >= 1");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw Error(ErrorCode::invalid_argument, "time stamps must increase");

    auto at = [&](double s) {
        if (s <= t.front()) return lr.front();
        if (s >= t.back()) return lr.back();
        auto it = std::upper_bound(t.begin(), t.end(), s);
        std::size_t j = static_cast<std::size_t>(it - t.begin());
        double w = (s - t[j - 1]) / (t[j] - t[j - 1]);
        return (1 - w) * lr[j - 1] + w * lr[j];
    };

    if (std::isinf(q)) {
        double m = std::max(at(a), at(b));
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= a && t[i] <= b) m = std::max(m, lr[i]);
        return m;
    }
    std::vector<double> ts{a}, vs{std::pow(at(a), q)};
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] > a && t[i] < b) {
            ts.push_back(t[i]);
            vs.push_back(std::pow(lr[i], q));
        }
    ts.push_back(b);
    vs.push_back(std::pow(at(b), q));
    double acc = 0;
    for (std::size_t i = 1; i < ts.size(); ++i) acc += 0.5 * (vs[i] + vs[i - 1]) * (ts[i] - ts[i - 1]);
    return std::pow(acc, 1.0 / q);
}

double mixed_norm(const std::vector<double>& t, const std::vector<RealField>& traj, double q, double r,
                  double a, double b) {
    if (t.size() != traj.size()) throw Error(ErrorCode::invalid_argument, "trajectory length mismatch");
    std::vector<double> lr(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) lr[i] = lp_norm(traj[i], r);
    return mixed_norm_profile(t, lr, q, a, b);
}

void write_field(const std::string& path, const RealField& f) {
    static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path);
    std::int64_t d = f.grid.d, n = f.grid.n;
    double L = f.grid.L;
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&L), sizeof L);
    out.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

RealField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    std::int64_t d = 0, n = 0;
    double L = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&L), sizeof L);
    if (!in) throw Error(ErrorCode::io, "truncated header in " + path);
    TorusGrid g(static_cast<int>(d), static_cast<int>(n), L);
    RealField f(g);
    in.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::io, "truncated samples in " + path);
    for (double x : f.v)
        if (!std::isfinite(x)) throw Error(ErrorCode::io, "non-finite sample in " + path);
    return f;
}

} // namespace kglab
