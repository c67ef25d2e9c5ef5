#include "kglab/propagator.hpp"

#include <algorithm>
#include <cmath>

namespace kglab {

std::vector<double> bracket_symbol(const TorusGrid& g) {
    auto n2 = frequency_norm2(g);
    for (auto& x : n2) x = std::sqrt(1.0 + x);
    return n2;
}

HalfWaveFlow::HalfWaveFlow(const TorusGrid& g, int sign_) : grid(g), sign(sign_ >= 0 ? 1 : -1) {
    omega = bracket_symbol(g);
}

void HalfWaveFlow::apply(SpectralField& s, double t) const {
    if (!(s.grid == grid)) throw Error(ErrorCode::invalid_argument, "grid mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= std::polar(1.0, sign * t * omega[i]);
}

SpectralField evolve_half_wave(const SpectralField& s, double t, int sign) {
    SpectralField out = s;
    HalfWaveFlow(s.grid, sign).apply(out, t);
    return out;
}

ComplexField evolve_half_wave(const ComplexField& f, double t, int sign) {
    return inverse_transform(evolve_half_wave(forward_transform(f), t, sign));
}

ComplexField evolve_half_wave(const RealField& f, double t, int sign) {
    return inverse_transform(evolve_half_wave(forward_transform(f), t, sign));
}

PairFlow::PairFlow(const TorusGrid& g) : grid(g), omega(bracket_symbol(g)) {}

void PairFlow::apply(SpectralField& u, SpectralField& ut, double t) const {
    if (!(u.grid == grid) || !(ut.grid == grid)) throw Error(ErrorCode::invalid_argument, "grid mismatch");
    for (std::size_t i = 0; i < u.size(); ++i) {
        double w = omega[i], c = std::cos(t * w), s = std::sin(t * w);
        cplx a = u.c[i], b = ut.c[i];
        u.c[i] = c * a + (s / w) * b;
        ut.c[i] = -w * s * a + c * b;
    }
}

StatePair PairFlow::apply(const StatePair& s, double t) const {
    auto u = forward_transform(s.u);
    auto ut = forward_transform(s.ut);
    apply(u, ut, t);
    return StatePair(inverse_real(u), inverse_real(ut));
}

StatePair evolve_pair(const StatePair& s, double t) { return PairFlow(s.grid()).apply(s, t); }

double linear_energy(const StatePair& s) {
    double a = sobolev_norm(s.u, 1.0), b = lp_norm(s.ut, 2);
    return a * a + b * b;
}

namespace {

// Smallest x such that entries with key above x carry at most tol of the total weight.
double energy_quantile(std::vector<std::pair<double, double>> kv, double tol) {
    if (kv.empty()) return 0.0;
    std::sort(kv.begin(), kv.end());
    double total = 0;
    for (const auto& p : kv) total += p.second;
    double tail = 0;
    for (std::size_t i = kv.size(); i-- > 0;) {
        tail += kv[i].second;
        if (tail > tol * total) return kv[i].first;
    }
    return kv.front().first;
}

double bracket(const IVec& k) {
    double s = 1;
    for (int x : k) s += double(x) * x;
    return std::sqrt(s);
}

// Spectral data around a cell centre k, evolved with the comoving phase
// <eta + k> - <k> - v.eta, v = k/<k>.
struct Baseband {
    TorusGrid g;
    std::vector<double> kc;
    std::vector<cplx> spec;
    std::vector<double> phase;

    Baseband(const TorusGrid& grid, const IVec& k) : g(grid), kc(k.begin(), k.end()) {
        if (static_cast<int>(k.size()) != g.d) throw Error(ErrorCode::invalid_argument, "cell index dimension");
        double kb = bracket(k);
        phase.resize(g.size());
        std::vector<int> idx(g.d);
        for (std::size_t f = 0; f < g.size(); ++f) {
            g.unravel(f, idx.data());
            double s = 1, lin = 0;
            for (int a = 0; a < g.d; ++a) {
                double eta = g.freq(idx[a]);
                s += (eta + kc[a]) * (eta + kc[a]);
                lin += kc[a] / kb * eta;
            }
            phase[f] = std::sqrt(s) - kb - lin;
        }
    }

    double lr(double t, double r) const {
        SpectralField s(g);
        for (std::size_t i = 0; i < s.size(); ++i) s.c[i] = spec[i] * std::polar(1.0, t * phase[i]);
        return lp_norm(inverse_transform(s), r);
    }

    // Smallest speed v such that modes with comoving group speed above v carry at most tol of the energy.
    double group_speed(double tol) const {
        double kb2 = 1;
        for (double x : kc) kb2 += x * x;
        double kb = std::sqrt(kb2);
        std::vector<std::pair<double, double>> sv;
        std::vector<int> idx(g.d);
        for (std::size_t f = 0; f < g.size(); ++f) {
            double e = std::norm(spec[f]);
            if (e == 0.0) continue;
            g.unravel(f, idx.data());
            double s = 1;
            for (int a = 0; a < g.d; ++a) {
                double x = g.freq(idx[a]) + kc[a];
                s += x * x;
            }
            double w = std::sqrt(s), v2 = 0;
            for (int a = 0; a < g.d; ++a) {
                double va = (g.freq(idx[a]) + kc[a]) / w - kc[a] / kb;
                v2 += va * va;
            }
            sv.emplace_back(std::sqrt(v2), e);
        }
        return energy_quantile(sv, tol);
    }
};

// Twice the radius outside which at most tol of the L^2 mass lies, for data centred at the origin.
double support_diameter(const ComplexField& u, double tol) {
    const auto& g = u.grid;
    std::vector<std::pair<double, double>> rv;
    std::vector<int> idx(g.d);
    for (std::size_t f = 0; f < u.size(); ++f) {
        double e = std::norm(u.v[f]);
        if (e == 0.0) continue;
        g.unravel(f, idx.data());
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += g.coord(idx[a]) * g.coord(idx[a]);
        rv.emplace_back(std::sqrt(r2), e);
    }
    return 2 * energy_quantile(rv, tol);
}

void check_wrap(const TorusGrid& g, double T, double speed, double diam) {
    double need = 2 * T * speed + diam;
    if (g.L < need)
        throw Error(ErrorCode::wraparound, "extent " + std::to_string(g.L) + " below required " +
                                               std::to_string(need) + " for horizon " + std::to_string(T));
}

double conjugate_exponent(double r) {
    if (std::isinf(r)) return 1.0;
    return r / (r - 1);
}

// ||exp(-|x|^2 / (2w^2))||_{L^p(R^d)}.
double gaussian_lp(double w, double p, int d) {
    if (std::isinf(p)) return 1.0;
    return std::pow(2 * kPi * w * w / p, d / (2 * p));
}

RegressionResult window_fit(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi,
                            std::vector<std::string>& flags, const std::string& name) {
    if (!(hi > lo) || hi / lo < std::sqrt(10.0)) {
        RegressionResult r;
        r.window_lo = lo;
        r.window_hi = hi;
        r.flag = "window shorter than half a decade";
        flags.push_back(name + " window skipped");
        return r;
    }
    auto r = try_loglog_fit(t, y, lo, hi);
    if (!r.valid) flags.push_back(name + " window: " + r.flag);
    return r;
}

} // namespace

DecayResult measure_cell_decay(const TorusGrid& g, const IVec& k, double r, const std::vector<double>& ts,
                               const DecayOptions& opt) {
    g.validate();
    if (!(r >= 2)) throw Error(ErrorCode::invalid_argument, "decay exponent r must be >= 2");
    if (ts.empty()) throw Error(ErrorCode::invalid_argument, "empty time grid");
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (!(ts[i] >= 0) || (i && !(ts[i] > ts[i - 1])))
            throw Error(ErrorCode::invalid_argument, "time grid must be nonnegative and increasing");
    if (!(opt.width > 0)) throw Error(ErrorCode::invalid_argument, "probe width must be positive");
    g.require_band(1.0);

    Baseband bb(g, k);
    double rp = conjugate_exponent(r);
    double amp = std::pow(2 * kPi * opt.width * opt.width, 0.5 * g.d) / gaussian_lp(opt.width, rp, g.d);
    auto phi = cell_multiplier(g, IVec(g.d, 0));
    auto n2 = frequency_norm2(g);
    bb.spec.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        bb.spec[i] = amp * std::exp(-0.5 * opt.width * opt.width * n2[i]) * phi[i];

    DecayResult res;
    res.k = k;
    res.r = r;
    res.t = ts;
    res.group_speed = bb.group_speed(opt.tail_tol);
    SpectralField s0(g);
    s0.c = bb.spec;
    res.support_diameter = support_diameter(inverse_transform(s0), opt.tail_tol);
    check_wrap(g, ts.back(), res.group_speed, res.support_diameter);

    res.ratio.reserve(ts.size());
    for (double t : ts) res.ratio.push_back(bb.lr(t, r));

    double kb = bracket(k), e = 1 - 2 / r;
    res.predicted_wave = -e * (g.d - 1) / 2.0;
    res.predicted_kg = -e * g.d / 2.0;
    double tw = 2 * kPi * kb, tk = 2 * kPi * kb * kb * kb, T = ts.back();
    res.wave = window_fit(ts, res.ratio, 2 * tw, std::min(tk, T) / 2, res.flags, "wave");
    res.kg = window_fit(ts, res.ratio, 2 * tk, T, res.flags, "kg");
    if (opt.fit_hi > opt.fit_lo) res.custom = try_loglog_fit(ts, res.ratio, opt.fit_lo, opt.fit_hi);

    res.crossover = std::nan("");
    if (e > 0) {
        double mid = 0.5 * (res.predicted_wave + res.predicted_kg);
        for (std::size_t i = 1; i < ts.size(); ++i) {
            if (ts[i - 1] <= 0 || ts[i - 1] < tw) continue;
            double sl = std::log(res.ratio[i] / res.ratio[i - 1]) / std::log(ts[i] / ts[i - 1]);
            if (sl < mid) {
                res.crossover = std::sqrt(ts[i] * ts[i - 1]);
                break;
            }
        }
    }
    return res;
}

std::string branch_name(StrichartzBranch b) {
    return b == StrichartzBranch::admissible ? "admissible" : "sub_admissible";
}

StrichartzBranch classify_strichartz(double q, double r, int d) {
    if (d < 2) throw Error(ErrorCode::invalid_argument, "Strichartz classification needs d >= 2");
    if (!(q >= 2) || !(r >= 2)) throw Error(ErrorCode::invalid_argument, "q and r must be >= 2");
    if (q == 2 && std::isinf(r) && (d == 2 || d == 3))
        throw Error(ErrorCode::excluded_endpoint, "(q,r,d) = (2,inf," + std::to_string(d) + ") is excluded");
    double iq = 1 / q, ir = 1 / r;
    const double eps = 1e-12;
    if (2 * iq + (d - 1) * ir <= (d - 1) / 2.0 + eps) return StrichartzBranch::admissible;
    if (2 * iq + d * ir <= d / 2.0 + eps) return StrichartzBranch::sub_admissible;
    throw Error(ErrorCode::invalid_argument, "(q,r) outside both Strichartz ranges");
}

double predicted_strichartz_exponent(double q, double r, int d) {
    double iq = 1 / q, ir = 1 / r;
    if (classify_strichartz(q, r, d) == StrichartzBranch::admissible) return iq;
    return 3 * iq - (d - 1) * (0.5 - ir);
}

namespace {

int next_pow2(double x) {
    int p = 1;
    while (p < x) p *= 2;
    return p;
}

double strichartz_spacing(double r) {
    if (std::isinf(r)) return 1.0;
    // |u|^r of data supported in |eta_i| <= 3/4 is resolved exactly when 2pi/dx > 3r/4.
    double dx = 2.0;
    while (2 * kPi / dx <= 0.75 * r && dx > 0.125) dx /= 2;
    return dx;
}

void fill_probe(Baseband& bb, double wpar, double wperp) {
    const auto& g = bb.g;
    auto phi = cell_multiplier(g, IVec(g.d, 0));
    bb.spec.assign(g.size(), cplx{});
    std::vector<int> idx(g.d);
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (phi[f] == 0.0) continue;
        g.unravel(f, idx.data());
        double e = wpar * wpar * g.freq(idx[0]) * g.freq(idx[0]);
        for (int a = 1; a < g.d; ++a) e += wperp * wperp * g.freq(idx[a]) * g.freq(idx[a]);
        bb.spec[f] = std::exp(-0.5 * e) * phi[f];
    }
    SpectralField s(g);
    s.c = bb.spec;
    double nrm = spectral_l2_norm(s);
    for (auto& c : bb.spec) c /= nrm;
}

} // namespace

StrichartzResult measure_cell_strichartz(int d, double q, double r, const StrichartzOptions& opt) {
    StrichartzResult res;
    res.branch = classify_strichartz(q, r, d);
    res.predicted = predicted_strichartz_exponent(q, r, d);
    res.d = d;
    res.q = q;
    res.r = r;
    if (opt.Ks.size() < 3) throw Error(ErrorCode::insufficient_points, "need at least three cells");
    if (opt.time_samples < 8) throw Error(ErrorCode::invalid_argument, "too few time samples");
    bool knapp = res.branch == StrichartzBranch::sub_admissible;
    res.probe = knapp ? "knapp" : "isotropic";
    double c = opt.horizon > 0 ? opt.horizon : (knapp ? 4.0 : 5.0);
    double dx = strichartz_spacing(r);

    std::vector<double> kb, vals;
    for (int K : opt.Ks) {
        if (K < 0) throw Error(ErrorCode::invalid_argument, "cell index must be nonnegative");
        IVec k(d, 0);
        k[0] = K;
        StrichartzCell cell;
        cell.K = K;
        cell.bracket = bracket(k);
        cell.horizon = c * 2 * kPi * (knapp ? std::pow(cell.bracket, 3) : cell.bracket);
        double wpar = 0.5, wperp = knapp ? 0.5 * cell.bracket : 0.5;

        // Size the torus from a provisional grid, then rebuild at the final extent.
        TorusGrid g0(d, next_pow2(std::max(32.0, 16 * wperp) / dx), next_pow2(std::max(32.0, 16 * wperp)));
        Baseband b0(g0, k);
        fill_probe(b0, wpar, wperp);
        double speed = b0.group_speed(opt.tail_tol);
        SpectralField s0(g0);
        s0.c = b0.spec;
        double diam = support_diameter(inverse_transform(s0), opt.tail_tol);
        int L = next_pow2(std::max(2 * cell.horizon * speed + diam, 8 * kPi));
        int n = static_cast<int>(std::lround(L / dx));
        if (n > opt.max_n)
            throw Error(ErrorCode::wraparound, "cell K=" + std::to_string(K) + " needs n=" + std::to_string(n) +
                                                   " points per axis, above the limit " + std::to_string(opt.max_n));
        cell.grid = TorusGrid(d, n, L);
        Baseband bb(cell.grid, k);
        fill_probe(bb, wpar, wperp);
        check_wrap(cell.grid, cell.horizon, bb.group_speed(opt.tail_tol), diam);

        std::vector<double> ts{0.0}, lr;
        double t0 = 0.05 * cell.bracket;
        for (int i = 0; i < opt.time_samples; ++i)
            ts.push_back(t0 * std::pow(cell.horizon / t0, double(i) / (opt.time_samples - 1)));
        for (double t : ts) lr.push_back(bb.lr(t, r));
        cell.norm = mixed_norm_profile(ts, lr, q, 0.0, cell.horizon);
        kb.push_back(cell.bracket);
        vals.push_back(cell.norm);
        res.cells.push_back(cell);
    }
    res.fit = loglog_fit(kb, vals);
    res.exponent = res.fit.slope;
    return res;
}

TransferResult verify_infty_transfer(const RealField& f, const std::vector<int>& Ns, double q, double r, double T,
                                     int time_samples) {
    const auto& g = f.grid;
    if (!(T > 0)) throw Error(ErrorCode::invalid_interval, "horizon must be positive");
    if (!(q >= 1) || !(r >= 1)) throw Error(ErrorCode::invalid_argument, "exponents must be >= 1");
    if (time_samples < 2) throw Error(ErrorCode::invalid_argument, "too few time samples");
    auto base = forward_transform(f);
    auto omega = bracket_symbol(g);
    TransferResult res;
    double lo = kInf, hi = 0;
    for (int N : Ns) {
        if (N < 1 || (N & (N - 1))) throw Error(ErrorCode::invalid_argument, "N must be dyadic");
        g.require_band(2.0 * N);
        auto m = dyadic_multiplier(g, N);
        SpectralField s = base;
        for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= m[i];
        if (spectral_l2_norm(s) == 0.0) throw Error(ErrorCode::invalid_argument, "zero data in dyadic block");
        check_wrap(g, T, 1.0, support_diameter(inverse_transform(s), 1e-4));

        std::vector<double> ts, lr;
        for (int i = 0; i <= time_samples; ++i) {
            double t = T * i / time_samples;
            SpectralField st = s;
            for (std::size_t j = 0; j < st.size(); ++j) st.c[j] *= std::polar(1.0, t * omega[j]);
            ts.push_back(t);
            lr.push_back(lp_norm(inverse_transform(st), r));
        }
        TransferRow row;
        row.N = N;
        row.sup = *std::max_element(lr.begin(), lr.end());
        row.lq = mixed_norm_profile(ts, lr, q, 0.0, T);
        row.ratio = row.sup / (std::pow(N, 1 / q) * row.lq);
        lo = std::min(lo, row.ratio);
        hi = std::max(hi, row.ratio);
        res.rows.push_back(row);
    }
    res.spread = res.rows.empty() ? 0.0 : hi / lo;
    return res;
}

} // namespace kglab
