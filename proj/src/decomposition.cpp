#include "kglab/decomposition.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace kglab {

namespace {

double bump(double u) {
    if (u <= -1.0 || u >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
}

// Cumulative bump integral on a uniform node table, refined by Gauss-Legendre.
struct BumpTable {
    static constexpr int M = 512;
    std::array<double, M + 1> cum{};
    double total = 0;

    BumpTable() {
        using GL = boost::math::quadrature::gauss<double, 20>;
        cum[0] = 0;
        for (int j = 0; j < M; ++j) {
            double a = node(j), b = node(j + 1);
            cum[j + 1] = cum[j] + GL::integrate(bump, a, b);
        }
        total = cum[M];
    }
    static double node(int j) { return -1.0 + 2.0 * j / M; }

    double integral_to(double u) const {
        using GL = boost::math::quadrature::gauss<double, 10>;
        if (u <= -1.0) return 0.0;
        if (u >= 1.0) return total;
        int j = static_cast<int>(std::floor((u + 1.0) * M / 2.0));
        j = std::clamp(j, 0, M - 1);
        return cum[j] + GL::integrate(bump, node(j), u);
    }
};

const BumpTable& bump_table() {
    static const BumpTable t;
    return t;
}

} // namespace

double smoothstep(double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    const auto& t = bump_table();
    double u = 2.0 * y - 1.0;
    if (u <= 0) return t.integral_to(u) / t.total;
    return 1.0 - (t.total - t.integral_to(u)) / t.total;
}

double mother_window(double x) { return smoothstep((0.75 - std::abs(x)) / 0.5); }

double phi_1d(double x) {
    double h = mother_window(x);
    if (h == 0.0) return 0.0;
    double fr = x - std::round(x);
    double den = 0;
    for (int j = -2; j <= 2; ++j) den += mother_window(fr - j);
    return h / den;
}

double chi0(double r) { return smoothstep(2.0 - r); }

double dyadic_psi(double r, int N) {
    if (N <= 1) return chi0(r);
    return chi0(r / N) - chi0(2.0 * r / N);
}

double unit_partition(const double* xi, const IVec& k) {
    double p = 1;
    for (std::size_t a = 0; a < k.size(); ++a) p *= phi_1d(xi[a] - k[a]);
    return p;
}

namespace {

std::vector<double> tensor_table(const TorusGrid& g, const std::vector<std::vector<double>>& axes) {
    std::vector<double> out(g.size());
    std::vector<int> idx(g.d);
    for (std::size_t i = 0; i < out.size(); ++i) {
        g.unravel(i, idx.data());
        double p = 1;
        for (int a = 0; a < g.d && p != 0.0; ++a) p *= axes[a][idx[a]];
        out[i] = p;
    }
    return out;
}

void check_index(const TorusGrid& g, const IVec& v) {
    if (static_cast<int>(v.size()) != g.d) throw Error(ErrorCode::invalid_argument, "index dimension mismatch");
}

} // namespace

std::vector<double> cell_multiplier(const TorusGrid& g, const IVec& k, int halfwidth) {
    check_index(g, k);
    std::vector<std::vector<double>> axes(g.d, std::vector<double>(g.n));
    for (int a = 0; a < g.d; ++a)
        for (int i = 0; i < g.n; ++i) {
            double s = 0;
            for (int j = -halfwidth; j <= halfwidth; ++j) s += phi_1d(g.freq(i) - k[a] - j);
            axes[a][i] = s;
        }
    return tensor_table(g, axes);
}

std::vector<double> spatial_window_table(const TorusGrid& g, const IVec& l) {
    check_index(g, l);
    std::vector<std::vector<double>> axes(g.d, std::vector<double>(g.n));
    for (int a = 0; a < g.d; ++a)
        for (int i = 0; i < g.n; ++i) {
            double y = g.coord(i) - l[a];
            y -= g.L * std::round(y / g.L);
            axes[a][i] = phi_1d(y);
        }
    return tensor_table(g, axes);
}

std::vector<double> dyadic_multiplier(const TorusGrid& g, int N) {
    auto n2 = frequency_norm2(g);
    std::vector<double> out(n2.size());
    for (std::size_t i = 0; i < n2.size(); ++i) out[i] = dyadic_psi(std::sqrt(n2[i]), N);
    return out;
}

SpectralField project_cell(const SpectralField& s, const IVec& k, int halfwidth) {
    int kmax = 0;
    for (int x : k) kmax = std::max(kmax, std::abs(x));
    s.grid.require_band(kmax + 1 + halfwidth);
    auto m = cell_multiplier(s.grid, k, halfwidth);
    SpectralField out = s;
    for (std::size_t i = 0; i < out.size(); ++i) out.c[i] *= m[i];
    return out;
}

ComplexField project_frequency_cell(const RealField& f, const IVec& k) {
    return inverse_transform(project_cell(forward_transform(f), k));
}

RealField spatial_window(const RealField& f, const IVec& l) {
    auto w = spatial_window_table(f.grid, l);
    RealField out = f;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
    return out;
}

ComplexField spatial_window(const ComplexField& f, const IVec& l) {
    auto w = spatial_window_table(f.grid, l);
    ComplexField out = f;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
    return out;
}

namespace {

std::vector<IVec> box_indices(int d, int lo, int hi) {
    std::vector<IVec> out;
    IVec cur(d, lo);
    while (true) {
        out.push_back(cur);
        int a = d - 1;
        while (a >= 0 && cur[a] == hi) {
            cur[a] = lo;
            --a;
        }
        if (a < 0) break;
        ++cur[a];
    }
    return out;
}

} // namespace

std::vector<IVec> spatial_cells(const TorusGrid& g) {
    if (std::abs(g.L - std::round(g.L)) > 1e-12)
        throw Error(ErrorCode::invalid_argument, "spatial partition needs an integer torus extent");
    int Li = static_cast<int>(std::round(g.L));
    int lo = -Li / 2;
    return box_indices(g.d, lo, lo + Li - 1);
}

int max_resolved_cell(const TorusGrid& g) {
    int K = static_cast<int>(std::floor(g.nyquist() - 1.0));
    while (K >= 0 && !(K + 1.0 < g.nyquist())) --K;
    return K;
}

std::vector<IVec> frequency_cells(const TorusGrid& g, int K) {
    if (K < 0) throw Error(ErrorCode::invalid_argument, "cell cutoff must be nonnegative");
    g.require_band(K + 1.0);
    return box_indices(g.d, -K, K);
}

PhaseSpaceAtom make_atom(const RealField& f, const IVec& k, const IVec& l) {
    return {k, l, project_frequency_cell(spatial_window(f, l), k)};
}

double modulation_norm(const RealField& f, double s, double p, double q, double r, int K) {
    if (!(p >= 1 && q >= 1 && r >= 1)) throw Error(ErrorCode::invalid_argument, "exponents must be >= 1");
    const auto& g = f.grid;
    if (K < 0) K = max_resolved_cell(g);
    auto ks = frequency_cells(g, K);
    auto ls = spatial_cells(g);

    // Sparse support of each cell multiplier.
    struct Sparse {
        std::vector<std::size_t> idx;
        std::vector<double> val;
    };
    std::vector<Sparse> mult(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
        auto m = cell_multiplier(g, ks[j]);
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] != 0.0) {
                mult[j].idx.push_back(i);
                mult[j].val.push_back(m[i]);
            }
    }

    auto accumulate = [](double acc, double x, double e) {
        return std::isinf(e) ? std::max(acc, x) : acc + std::pow(x, e);
    };
    auto finish = [](double acc, double e) { return std::isinf(e) ? acc : std::pow(acc, 1.0 / e); };

    std::vector<double> inner(ks.size(), 0.0);
    const double plancherel = std::pow(g.dxi() / (2.0 * kPi), g.d);
    for (const auto& l : ls) {
        auto wl = spatial_window_table(g, l);
        bool any = false;
        RealField fl = f;
        for (std::size_t i = 0; i < fl.size(); ++i) {
            fl[i] *= wl[i];
            any = any || fl[i] != 0.0;
        }
        if (!any) continue;
        auto sp = forward_transform(fl);
        for (std::size_t j = 0; j < ks.size(); ++j) {
            double a;
            if (r == 2.0) {
                double acc = 0;
                for (std::size_t t = 0; t < mult[j].idx.size(); ++t)
                    acc += std::norm(sp.c[mult[j].idx[t]] * mult[j].val[t]);
                a = std::sqrt(acc * plancherel);
            } else {
                SpectralField pk(g);
                for (std::size_t t = 0; t < mult[j].idx.size(); ++t)
                    pk.c[mult[j].idx[t]] = sp.c[mult[j].idx[t]] * mult[j].val[t];
                a = lp_norm(inverse_transform(pk), r);
            }
            inner[j] = accumulate(inner[j], a, p);
        }
    }
    double outer = 0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        double k2 = 0;
        for (int x : ks[j]) k2 += double(x) * x;
        outer = accumulate(outer, std::pow(1.0 + k2, 0.5 * s) * finish(inner[j], p), q);
    }
    return finish(outer, q);
}

DecayTable measure_mismatch_decay(MismatchKind kind, const std::vector<int>& separations, const RealField& probe,
                                  int power_iters, double fit_lo, double fit_hi) {
    if (separations.empty()) throw Error(ErrorCode::invalid_argument, "empty separation range");
    if (lp_norm(probe, 2) == 0.0) throw Error(ErrorCode::invalid_argument, "probe must be nonzero");
    const auto& g = probe.grid;
    const IVec zero(g.d, 0);

    DecayTable out;
    for (int sep : separations) {
        IVec shifted = zero;
        shifted[0] = sep;
        std::vector<double> window, mult_a, mult_b;
        if (kind == MismatchKind::spatial) {
            // T = h_l P_0 h_0, T* = h_0 P_0 h_l
            window = spatial_window_table(g, shifted);
            mult_a = cell_multiplier(g, zero);
            mult_b = spatial_window_table(g, zero);
        } else {
            // T = P_k h_0 P_0, T* = P_0 h_0 P_k
            g.require_band(std::abs(sep) + 1.0);
            window = cell_multiplier(g, shifted);
            mult_a = spatial_window_table(g, zero);
            mult_b = cell_multiplier(g, zero);
        }

        auto apply_phys = [](ComplexField& f, const std::vector<double>& w) {
            for (std::size_t i = 0; i < f.size(); ++i) f[i] *= w[i];
        };
        auto apply_spec = [](ComplexField& f, const std::vector<double>& w) {
            auto s = forward_transform(f);
            for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= w[i];
            f = inverse_transform(s);
        };
        // Spatial: (outer=window phys, middle=mult_a spec, inner=mult_b phys).
        // Frequency: (outer=window spec, middle=mult_a phys, inner=mult_b spec).
        bool spatial = kind == MismatchKind::spatial;
        auto T = [&](ComplexField f) {
            if (spatial) {
                apply_phys(f, mult_b);
                apply_spec(f, mult_a);
                apply_phys(f, window);
            } else {
                apply_spec(f, mult_b);
                apply_phys(f, mult_a);
                apply_spec(f, window);
            }
            return f;
        };
        auto Tadj = [&](ComplexField f) {
            if (spatial) {
                apply_phys(f, window);
                apply_spec(f, mult_a);
                apply_phys(f, mult_b);
            } else {
                apply_spec(f, window);
                apply_phys(f, mult_a);
                apply_spec(f, mult_b);
            }
            return f;
        };

        ComplexField v = complexify(probe);
        double nv = lp_norm(v, 2);
        double ratio = lp_norm(T(v), 2) / nv;
        for (int it = 0; it < power_iters; ++it) {
            ComplexField u = Tadj(T(v));
            double nu = lp_norm(u, 2);
            if (nu == 0.0) break;
            u *= 1.0 / nu;
            v = std::move(u);
            ratio = std::max(ratio, lp_norm(T(v), 2));
        }
        out.separation.push_back(std::abs(sep));
        out.ratio.push_back(ratio);
    }
    out.fit = try_loglog_fit(out.separation, out.ratio, fit_lo, fit_hi);
    return out;
}

} // namespace kglab
