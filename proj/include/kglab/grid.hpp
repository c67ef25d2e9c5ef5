#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kglab/error.hpp"

namespace kglab {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Periodic box [-L/2, L/2)^d sampled with n points per axis.
struct TorusGrid {
    int d = 1;
    int n = 64;
    double L = 32.0;

    TorusGrid() = default;
    TorusGrid(int d_, int n_, double L_);

    void validate() const;
    double dx() const { return L / n; }
    double dxi() const { return 2.0 * kPi / L; }
    double nyquist() const { return kPi * n / L; }
    double cell_volume() const;
    std::size_t size() const;

    double coord(int i) const { return -0.5 * L + i * dx(); }
    int signed_index(int i) const { return i < n / 2 ? i : i - n; }
    double freq(int i) const { return signed_index(i) * dxi(); }

    // Multi-index of a flat row-major offset.
    void unravel(std::size_t flat, int* idx) const;
    // Throws out_of_band unless kmax is strictly below the Nyquist frequency.
    void require_band(double kmax) const;

    bool operator==(const TorusGrid& o) const { return d == o.d && n == o.n && L == o.L; }
};

template <class T>
struct Field {
    TorusGrid grid;
    std::vector<T> v;

    Field() = default;
    explicit Field(const TorusGrid& g) : grid(g), v(g.size(), T{}) {}
    Field(const TorusGrid& g, std::vector<T> data);

    std::size_t size() const { return v.size(); }
    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double a);
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

// Coefficients in FFT order: index i along an axis is frequency grid.freq(i).
struct SpectralField {
    TorusGrid grid;
    std::vector<cplx> c;

    SpectralField() = default;
    explicit SpectralField(const TorusGrid& g) : grid(g), c(g.size(), cplx{}) {}
    std::size_t size() const { return c.size(); }
};

struct StatePair {
    RealField u;
    RealField ut;

    StatePair() = default;
    explicit StatePair(const TorusGrid& g) : u(g), ut(g) {}
    StatePair(RealField u_, RealField ut_);
    const TorusGrid& grid() const { return u.grid; }
};

RealField real_part(const ComplexField& f);
ComplexField complexify(const RealField& f);
RealField sample(const TorusGrid& g, const std::function<double(const double* x)>& fn);

// f^(xi) = dx^d sum_j f(x_j) e^{-i x_j . xi}; the inverse carries (dxi / 2pi)^d.
SpectralField forward_transform(const RealField& f);
SpectralField forward_transform(const ComplexField& f);
ComplexField inverse_transform(const SpectralField& s);
RealField inverse_real(const SpectralField& s);

// Multiply every coefficient by m(xi).
void apply_multiplier(SpectralField& s, const std::function<cplx(const double* xi)>& m);
void apply_real_multiplier(SpectralField& s, const std::function<double(const double* xi)>& m);
// Per-mode |xi|^2 in FFT order.
std::vector<double> frequency_norm2(const TorusGrid& g);

double lp_norm(const RealField& f, double p);
double lp_norm(const ComplexField& f, double p);
double spectral_l2_norm(const SpectralField& s);
double sobolev_norm(const RealField& f, double s);
double sobolev_norm(const SpectralField& sf, double s);

// L^q_t L^r_x over [a,b] from a sampled trajectory. Trapezoid in t with linear
// interpolation of ||u(t)||_r^q at the window ends.
double mixed_norm(const std::vector<double>& t, const std::vector<RealField>& traj, double q, double r,
                  double a, double b);
double mixed_norm_profile(const std::vector<double>& t, const std::vector<double>& lr, double q, double a,
                          double b);

void write_field(const std::string& path, const RealField& f);
RealField read_field(const std::string& path);

} // namespace kglab
