#include "kglab/cones.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace kglab {

double Cone::half_width(double t) const {
    if (t < t0 || t > t0 + N) return -1.0;
    return base_factor() * N - (t - t0);
}

Cone Cone::widened() const {
    Cone w = *this;
    w.kind = ConeKind::wide;
    return w;
}

namespace {

double periodic_offset(double y, double period) {
    if (period > 0) y -= period * std::round(y / period);
    return y;
}

void check_cone(const Cone& c, int d) {
    if (static_cast<int>(c.x0.size()) != d) throw Error(ErrorCode::invalid_argument, "cone centre dimension");
    if (!(c.N > 0)) throw Error(ErrorCode::invalid_argument, "cone scale must be positive");
}

const double kTimeEps = 1e-9;

// Indices of stored slices in [a, b]; throws coverage_gap unless both ends are stored.
std::vector<std::size_t> slices_in(const Trajectory& traj, double a, double b) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < traj.t.size(); ++j)
        if (traj.t[j] >= a - kTimeEps && traj.t[j] <= b + kTimeEps) idx.push_back(j);
    if (idx.empty() || std::abs(traj.t[idx.front()] - a) > kTimeEps || std::abs(traj.t[idx.back()] - b) > kTimeEps)
        throw Error(ErrorCode::coverage_gap, "trajectory does not store slices at both ends of [" + std::to_string(a) +
                                                 ", " + std::to_string(b) + "]");
    return idx;
}

std::vector<double> trapezoid_weights(const Trajectory& traj, const std::vector<std::size_t>& idx) {
    std::vector<double> w(idx.size(), 0.0);
    for (std::size_t i = 1; i < idx.size(); ++i) {
        double h = traj.t[idx[i]] - traj.t[idx[i - 1]];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    return w;
}

double masked_sum(const std::vector<double>& v, const std::vector<char>& mask, double vol) {
    double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (mask[i]) acc += v[i];
    return acc * vol;
}

// |x - x0|_inf <= h on the grid with periodic distance.
std::vector<char> box_mask(const TorusGrid& g, const std::vector<double>& x0, double h) {
    std::vector<char> m(g.size(), 0);
    if (h < 0) return m;
    std::vector<int> idx(g.d);
    for (std::size_t f = 0; f < g.size(); ++f) {
        g.unravel(f, idx.data());
        double r = 0;
        for (int a = 0; a < g.d; ++a) r = std::max(r, std::abs(periodic_offset(g.coord(idx[a]) - x0[a], g.L)));
        m[f] = r <= h;
    }
    return m;
}

double potential_density(double u, const NonlinearModel& m) {
    if (m.linear()) return 0.0;
    return std::pow(std::abs(u), m.p + 1) / (m.p + 1);
}

std::vector<RealField> gradient(const RealField& u) {
    const auto& g = u.grid;
    auto s = forward_transform(u);
    std::vector<RealField> out;
    std::vector<int> idx(g.d);
    for (int a = 0; a < g.d; ++a) {
        SpectralField da(g);
        for (std::size_t f = 0; f < g.size(); ++f) {
            g.unravel(f, idx.data());
            int i = idx[a];
            // the Nyquist mode has no real derivative
            double xi = (g.n % 2 == 0 && i == g.n / 2) ? 0.0 : g.freq(i);
            da.c[f] = cplx(0, xi) * s.c[f];
        }
        out.push_back(inverse_real(da));
    }
    return out;
}

} // namespace

bool cone_membership(const Cone& c, double t, const double* x, double period) {
    double h = c.half_width(t);
    if (h < 0) return false;
    for (std::size_t a = 0; a < c.x0.size(); ++a)
        if (std::abs(periodic_offset(x[a] - c.x0[a], period)) > h) return false;
    return true;
}

std::vector<char> cone_slice(const Cone& c, const TorusGrid& g, double t) {
    check_cone(c, g.d);
    return box_mask(g, c.x0, c.half_width(t));
}

std::vector<double> energy_density(const StatePair& s, const NonlinearModel& m) {
    auto grad = gradient(s.u);
    std::vector<double> e(s.u.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        double g2 = 0;
        for (const auto& ga : grad) g2 += ga[i] * ga[i];
        e[i] = 0.5 * (s.ut[i] * s.ut[i] + s.u[i] * s.u[i] + g2) + potential_density(s.u[i], m);
    }
    return e;
}

double local_energy(const Trajectory& traj, const Cone& c) {
    if (traj.states.empty()) throw Error(ErrorCode::coverage_gap, "empty trajectory");
    const auto& g = traj.states[0].grid();
    check_cone(c, g.d);
    double best = 0;
    for (std::size_t j : slices_in(traj, c.t0, c.t0 + c.N)) {
        auto e = energy_density(traj.states[j], traj.model);
        best = std::max(best, masked_sum(e, cone_slice(c, g, traj.t[j]), g.cell_volume()));
    }
    return best;
}

namespace {

// Convolutions of sum_j w_j |u_j|^{p+1} with shells ||x| - |t_j - t'|| <= thickness, one field per t'.
struct ForceFields {
    std::vector<double> tprime;
    std::vector<RealField> fields;
    double thickness = 0;
    double spacing = 0;
};

ForceFields force_fields(const Trajectory& traj, double t0, double N, double delta) {
    if (!(delta > 0)) throw Error(ErrorCode::invalid_argument, "delta must be positive");
    const auto& g = traj.states[0].grid();
    auto idx = slices_in(traj, t0, t0 + N);
    auto w = trapezoid_weights(traj, idx);
    ForceFields ff;
    ff.thickness = std::pow(N, 10 * delta);
    ff.spacing = 0.5 * ff.thickness;
    for (double tp = t0; tp <= t0 + N + 1e-12; tp += ff.spacing) ff.tprime.push_back(tp);
    if (t0 + N - ff.tprime.back() > 1e-12) ff.tprime.push_back(t0 + N);

    std::vector<SpectralField> rho;
    for (std::size_t j : idx) {
        RealField r(g);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::pow(std::abs(traj.states[j].u[i]), traj.model.p + 1);
        rho.push_back(forward_transform(r));
    }

    // shell kernels sampled at periodic displacements, with the frequency checkerboard that turns
    // a product of centred transforms into a convolution
    std::vector<double> disp2(g.size());
    std::vector<double> board(g.size());
    std::vector<int> ix(g.d);
    for (std::size_t f = 0; f < g.size(); ++f) {
        g.unravel(f, ix.data());
        double r2 = 0;
        int par = 0;
        for (int a = 0; a < g.d; ++a) {
            double y = g.signed_index(ix[a]) * g.dx();
            r2 += y * y;
            par += ix[a];
        }
        disp2[f] = r2;
        board[f] = (par % 2) ? -1.0 : 1.0;
    }
    std::unordered_map<long long, SpectralField> cache;
    auto kernel = [&](double r) -> const SpectralField& {
        long long key = std::llround(r * 1e9);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        RealField k(g);
        for (std::size_t f = 0; f < g.size(); ++f)
            k[f] = std::abs(std::sqrt(disp2[f]) - r) <= ff.thickness ? 1.0 : 0.0;
        auto s = forward_transform(k);
        for (std::size_t f = 0; f < g.size(); ++f) s.c[f] *= board[f];
        return cache.emplace(key, std::move(s)).first->second;
    };

    for (double tp : ff.tprime) {
        SpectralField acc(g);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (w[j] == 0.0) continue;
            const auto& K = kernel(std::abs(traj.t[idx[j]] - tp));
            for (std::size_t f = 0; f < g.size(); ++f) acc.c[f] += w[j] * rho[j].c[f] * K.c[f];
        }
        ff.fields.push_back(inverse_real(acc));
    }
    return ff;
}

// Grid offsets of the x' lattice |x' - x0| <= 3N with the given spacing.
std::vector<std::size_t> lattice_points(const TorusGrid& g, const std::vector<double>& x0, double N, double h) {
    int m = static_cast<int>(std::floor(3 * N / h));
    std::vector<std::size_t> out;
    std::vector<int> k(g.d, -m);
    while (true) {
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += (k[a] * h) * (k[a] * h);
        if (r2 <= 9 * N * N * (1 + 1e-12)) {
            std::size_t flat = 0;
            for (int a = 0; a < g.d; ++a) {
                double x = x0[a] + k[a] * h;
                long long i = std::llround((x + 0.5 * g.L) / g.dx());
                i = ((i % g.n) + g.n) % g.n;
                flat = flat * g.n + static_cast<std::size_t>(i);
            }
            out.push_back(flat);
        }
        int a = g.d - 1;
        while (a >= 0 && k[a] == m) k[a--] = -m;
        if (a < 0) break;
        ++k[a];
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double force_sup(const ForceFields& ff, const std::vector<std::size_t>& pts) {
    double best = 0;
    for (const auto& f : ff.fields)
        for (std::size_t p : pts) best = std::max(best, f[p]);
    return best;
}

} // namespace

double local_force(const Trajectory& traj, const Cone& c, double delta, ForceLattice* info) {
    if (traj.states.empty()) throw Error(ErrorCode::coverage_gap, "empty trajectory");
    const auto& g = traj.states[0].grid();
    check_cone(c, g.d);
    auto ff = force_fields(traj, c.t0, c.N, delta);
    auto pts = lattice_points(g, c.x0, c.N, ff.spacing);
    if (info) {
        info->thickness = ff.thickness;
        info->spacing = ff.spacing;
        info->time_points = static_cast<int>(ff.tprime.size());
        info->space_points = static_cast<int>(pts.size());
    }
    return force_sup(ff, pts);
}

RealField cone_cutoff(const Cone& c, const TorusGrid& g) {
    check_cone(c, g.d);
    RealField out(g);
    std::vector<int> idx(g.d);
    for (std::size_t f = 0; f < g.size(); ++f) {
        g.unravel(f, idx.data());
        double v = 1;
        for (int a = 0; a < g.d; ++a) {
            double y = std::abs(periodic_offset(g.coord(idx[a]) - c.x0[a], g.L));
            v *= smoothstep((3 * c.N - y) / c.N);
        }
        out[f] = v;
    }
    return out;
}

StatePair localized_data(const StatePair& v, const Cone& c) {
    auto cut = cone_cutoff(c, v.grid());
    StatePair w = v;
    for (std::size_t i = 0; i < cut.size(); ++i) {
        w.u[i] *= cut[i];
        w.ut[i] *= cut[i];
    }
    return w;
}

Forcing cone_forcing(const Forcing& f, const Cone& c) {
    Cone k = c;
    k.kind = ConeKind::standard;
    return [f, k](double t) {
        RealField F = f(t);
        auto mask = cone_slice(k, F.grid, t);
        for (std::size_t i = 0; i < F.size(); ++i)
            if (!mask[i]) F[i] = 0.0;
        return F;
    };
}

FluxReport flux_audit(const Trajectory& w, const Cone& c, const Forcing& f, double delta) {
    if (w.states.empty()) throw Error(ErrorCode::coverage_gap, "empty trajectory");
    const auto& g = w.states[0].grid();
    check_cone(c, g.d);
    const auto& m = w.model;
    Cone K = c;
    K.kind = ConeKind::standard;
    Cone W = c.widened();
    auto idx = slices_in(w, c.t0, c.t0 + c.N);
    auto wt = trapezoid_weights(w, idx);
    double vol = g.cell_volume();

    FluxReport r;
    const auto& s0 = w.states[idx.front()];
    {
        auto grad = gradient(s0.u);
        auto mask = box_mask(g, c.x0, 3 * c.N);
        double acc = 0;
        for (std::size_t i = 0; i < s0.u.size(); ++i) {
            if (!mask[i]) continue;
            double g2 = 0;
            for (const auto& ga : grad) g2 += ga[i] * ga[i];
            double pot = m.linear() ? 0.0 : std::pow(std::abs(s0.u[i]), m.p + 1);
            acc += s0.ut[i] * s0.ut[i] + s0.u[i] * s0.u[i] + g2 + pot;
        }
        r.e_base = acc * vol;
    }
    r.initial_energy = energy(s0, m).total;
    r.e_tilde = local_energy(w, W);
    r.wide_initial = masked_sum(energy_density(s0, m), cone_slice(W, g, w.t[idx.front()]), vol);
    ForceLattice info;
    r.f_tilde = local_force(w, K, delta, &info);
    r.thickness = info.thickness;

    std::vector<double> ts, lr;
    double tri = 0;
    for (std::size_t q = 0; q < idx.size(); ++q) {
        std::size_t j = idx[q];
        auto mask = cone_slice(K, g, w.t[j]);
        RealField F = f ? f(w.t[j]) : RealField(g);
        for (std::size_t i = 0; i < F.size(); ++i)
            if (!mask[i]) F[i] = 0.0;
        ts.push_back(w.t[j]);
        lr.push_back(lp_norm(F, m.s_space()));
        double acc = 0;
        const auto& st = w.states[j];
        for (std::size_t i = 0; i < F.size(); ++i)
            if (F[i] != 0.0) acc += std::abs(F[i]) * std::abs(st.ut[i]) * std::pow(std::abs(st.u[i]), m.p - 1);
        tri += wt[q] * acc * vol;
    }
    r.s_norm = ts.size() >= 2 ? mixed_norm_profile(ts, lr, m.s_time(), ts.front(), ts.back()) : 0.0;
    r.trilinear = tri;

    r.c0_ratio = r.wide_initial > 0 ? r.e_tilde / r.wide_initial : 0.0;
    r.c0_hat = r.e_base > 0 ? r.initial_energy / r.e_base : 0.0;
    double forcing_terms = std::pow(r.s_norm, 2 * m.p) + r.trilinear;
    double excess = std::max(0.0, r.e_tilde - 8.0 / 7.0 * r.c0_hat * r.e_base);
    r.ce_hat = excess == 0 ? 0.0 : (forcing_terms > 0 ? excess / forcing_terms : kInf);
    double fr = r.thickness * (r.e_tilde + forcing_terms);
    r.cf_hat = r.f_tilde == 0 ? 0.0 : (fr > 0 ? r.f_tilde / fr : kInf);
    return r;
}

FluxVerdict flux_verdict(const std::vector<FluxReport>& reports, double max_spread) {
    auto spread = [](std::vector<double> v) {
        v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !(x > 0); }), v.end());
        if (v.empty()) return 1.0;
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return std::isfinite(*hi) ? *hi / *lo : kInf;
    };
    std::vector<double> ce, cf;
    for (const auto& r : reports) {
        ce.push_back(r.ce_hat);
        cf.push_back(r.cf_hat);
    }
    FluxVerdict v;
    v.ce_spread = spread(ce);
    v.cf_spread = spread(cf);
    v.pass = v.ce_spread < max_spread && v.cf_spread < max_spread;
    return v;
}

double cone_difference(const Trajectory& a, const Trajectory& b, const Cone& c) {
    if (a.t.size() != b.t.size()) throw Error(ErrorCode::invalid_argument, "trajectories differ in length");
    const auto& g = a.states.at(0).grid();
    check_cone(c, g.d);
    double best = 0;
    for (std::size_t j : slices_in(a, c.t0, c.t0 + c.N)) {
        if (std::abs(a.t[j] - b.t[j]) > kTimeEps) throw Error(ErrorCode::invalid_argument, "time grids differ");
        auto mask = cone_slice(c, g, a.t[j]);
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) best = std::max(best, std::abs(a.states[j].u[i] - b.states[j].u[i]));
    }
    return best;
}

bool agree_on_base(const StatePair& a, const StatePair& b, const Cone& c, double tol) {
    auto mask = box_mask(a.grid(), c.x0, 2 * c.N);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] && (std::abs(a.u[i] - b.u[i]) > tol || std::abs(a.ut[i] - b.ut[i]) > tol)) return false;
    return true;
}

void ExponentBudget::validate() const {
    if (!(delta > 0 && delta < 1.0 / 50)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1/50)");
    if (!(theta > 0)) throw Error(ErrorCode::invalid_argument, "theta must be positive");
    if (!(alpha > theta + 20 * delta)) throw Error(ErrorCode::invalid_argument, "alpha must exceed theta + 20 delta");
    if (!(beta > 0)) throw Error(ErrorCode::invalid_argument, "beta must be positive");
}

RealField DyadicForcing::total(std::size_t j) const {
    RealField out(grid());
    for (const auto& [N, v] : pieces) out += v.at(j);
    return out;
}

const TorusGrid& DyadicForcing::grid() const {
    if (pieces.empty() || pieces.begin()->second.empty()) throw Error(ErrorCode::invalid_argument, "no pieces");
    return pieces.begin()->second.front().grid;
}

DyadicForcing dyadic_free_pieces(const StatePair& data, const std::vector<int>& Ns, double dt, int steps) {
    if (!(dt > 0) || steps < 1) throw Error(ErrorCode::invalid_interval, "empty time grid");
    const auto& g = data.grid();
    auto u0 = forward_transform(data.u);
    auto u1 = forward_transform(data.ut);
    auto omega = bracket_symbol(g);
    DyadicForcing out;
    for (int j = 0; j <= steps; ++j) out.t.push_back(j * dt);
    for (int N : Ns) {
        if (N < 1 || (N & (N - 1))) throw Error(ErrorCode::invalid_argument, "N must be dyadic");
        auto psi = dyadic_multiplier(g, N);
        auto& v = out.pieces[N];
        for (double t : out.t) {
            SpectralField s(g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                double w = omega[i];
                s.c[i] = psi[i] * (std::cos(t * w) * u0.c[i] + std::sin(t * w) / w * u1.c[i]);
            }
            v.push_back(inverse_real(s));
        }
    }
    return out;
}

bool ConditionReport::all_pass() const {
    for (const auto& c : conditions)
        if (!c.pass) return false;
    return true;
}

ConditionReport check_conditions(const DyadicForcing& F, const ExponentBudget& budget, double eta,
                                 const NonlinearModel& m, const std::vector<Trajectory>& tests,
                                 const std::vector<int>& Ns) {
    budget.validate();
    if (!(eta > 0)) throw Error(ErrorCode::invalid_argument, "eta must be positive");
    const auto& g = F.grid();
    const auto& t = F.t;
    double T = t.back();
    std::size_t nt = t.size();
    ConditionReport rep;

    std::vector<RealField> total;
    for (std::size_t j = 0; j < nt; ++j) total.push_back(F.total(j));

    {
        ConditionResult c;
        c.name = "(i) S-norm finite";
        std::vector<double> lr;
        for (const auto& x : total) lr.push_back(lp_norm(x, m.s_space()));
        c.value = mixed_norm_profile(t, lr, m.s_time(), 0.0, T);
        c.threshold = kInf;
        c.margin = kInf;
        c.pass = std::isfinite(c.value);
        rep.conditions.push_back(c);
    }
    {
        ConditionResult c;
        c.name = "(ii) unit-window L^1 L^r1 <= eta";
        double r1 = energy_forcing_exponent(m.p);
        std::vector<double> lr;
        for (const auto& x : total) lr.push_back(lp_norm(x, r1));
        double worst = 0;
        if (T < 1) {
            c.flags.push_back("horizon shorter than one");
            worst = mixed_norm_profile(t, lr, 1.0, 0.0, T);
        } else {
            for (std::size_t j = 0; j < nt && t[j] + 1 <= T + kTimeEps; ++j)
                worst = std::max(worst, mixed_norm_profile(t, lr, 1.0, t[j], std::min(T, t[j] + 1)));
        }
        c.value = worst;
        c.threshold = eta;
        c.margin = eta - worst;
        c.pass = worst <= eta;
        rep.conditions.push_back(c);
    }
    {
        ConditionResult c;
        c.name = "(iii) N^beta ||F_N||_{L^1([N^{1+theta},T], L^inf)} <= eta";
        double worst = 0;
        for (const auto& [N, v] : F.pieces) {
            double a = std::pow(double(N), 1 + budget.theta);
            if (a >= T) {
                c.flags.push_back("partial coverage: horizon below N^{1+theta} for N=" + std::to_string(N));
                continue;
            }
            std::vector<double> lr;
            for (const auto& x : v) lr.push_back(lp_norm(x, kInf));
            double val = mixed_norm_profile(t, lr, 1.0, a, T) * std::pow(double(N), budget.beta);
            worst = std::max(worst, val);
        }
        c.value = worst;
        c.threshold = eta;
        c.margin = eta - worst;
        c.pass = worst <= eta;
        rep.conditions.push_back(c);
    }
    {
        ConditionResult c;
        c.name = "(iv) trilinear cone integral <= eta M^-alpha (E~ + F~)";
        double worst = 0;
        for (const auto& u : tests) {
            if (u.t.size() != nt) throw Error(ErrorCode::invalid_argument, "test trajectory time grid differs");
            for (std::size_t j = 0; j < nt; ++j)
                if (std::abs(u.t[j] - t[j]) > kTimeEps)
                    throw Error(ErrorCode::invalid_argument, "test trajectory time grid differs");
            std::vector<std::vector<double>> dens;
            for (const auto& s : u.states) dens.push_back(energy_density(s, u.model));
            for (int N : Ns) {
                int kmax = static_cast<int>(std::floor(std::pow(double(N), budget.theta) + 1e-12));
                int cells = std::max(1, static_cast<int>(std::floor(g.L / N)));
                for (int k = 0; k <= kmax; ++k) {
                    double t0 = double(k) * N;
                    if (t0 + N > T + kTimeEps) {
                        c.flags.push_back("partial coverage: cone at t0=" + std::to_string(t0) +
                                          " N=" + std::to_string(N) + " beyond horizon");
                        continue;
                    }
                    auto idx = slices_in(u, t0, t0 + N);
                    Trajectory dummy;
                    dummy.t = u.t;
                    auto wts = trapezoid_weights(u, idx);
                    auto ff = force_fields(u, t0, N, budget.delta);
                    std::vector<int> cell(g.d, 0);
                    while (true) {
                        Cone K{t0, std::vector<double>(g.d), double(N), ConeKind::standard};
                        for (int a = 0; a < g.d; ++a) K.x0[a] = -0.5 * g.L + double(cell[a]) * N;
                        Cone W = K.widened();
                        double et = 0;
                        for (std::size_t q = 0; q < idx.size(); ++q)
                            et = std::max(et, masked_sum(dens[idx[q]], cone_slice(W, g, t[idx[q]]), g.cell_volume()));
                        double ft = force_sup(ff, lattice_points(g, K.x0, N, ff.spacing));
                        for (const auto& [M, v] : F.pieces) {
                            if (M < N) continue;
                            double lhs = 0;
                            for (std::size_t q = 0; q < idx.size(); ++q) {
                                std::size_t j = idx[q];
                                auto mask = cone_slice(K, g, t[j]);
                                double acc = 0;
                                for (std::size_t i = 0; i < mask.size(); ++i)
                                    if (mask[i])
                                        acc += std::abs(v[j][i]) * std::abs(u.states[j].ut[i]) *
                                               std::pow(std::abs(u.states[j].u[i]), m.p - 1);
                                lhs += wts[q] * acc * g.cell_volume();
                            }
                            double rhs = std::pow(double(M), -budget.alpha) * (et + ft);
                            double ratio = rhs > 0 ? lhs / rhs : (lhs > 0 ? kInf : 0.0);
                            worst = std::max(worst, ratio);
                        }
                        int a = g.d - 1;
                        while (a >= 0 && cell[a] == cells - 1) cell[a--] = 0;
                        if (a < 0) break;
                        ++cell[a];
                    }
                }
            }
        }
        c.value = worst;
        c.threshold = eta;
        c.margin = eta - worst;
        c.pass = worst <= eta;
        rep.conditions.push_back(c);
    }
    return rep;
}

namespace {

void fill_threshold(ThresholdReport& r) {
    int d = r.d;
    Rational dd(d);
    r.s_energy = r.theta + Rational(20) * r.delta + Rational(d + 2, 8) + Rational(2) * dd * r.delta;
    r.s_dispersive = Rational(1) + r.beta - Rational(d - 3, 2) * r.theta;
    r.s_min = max(r.s_energy, r.s_dispersive);
    r.s_limit = Rational(d * d - d + 10, 8 * (d - 1));
    r.theta_opt = Rational(6 - d, 4 * (d - 1));
    r.feasible = r.s_min < Rational(1);
    if (r.s_energy == r.s_dispersive)
        r.binding = "both";
    else
        r.binding = r.s_energy > r.s_dispersive ? "alpha chain (theta + 20 delta < alpha)" : "beta chain (beta > 0)";
}

} // namespace

ThresholdReport regularity_threshold(int d, const Rational& delta, const Rational& theta, const Rational& beta) {
    if (d < 2) throw Error(ErrorCode::invalid_argument, "dimension must be >= 2");
    if (!(delta > Rational(0) && delta < Rational(1, 50)))
        throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1/50)");
    if (!(theta > Rational(0))) throw Error(ErrorCode::invalid_argument, "theta must be positive");
    if (!(beta > Rational(0))) throw Error(ErrorCode::invalid_argument, "beta must be positive");
    ThresholdReport r;
    r.d = d;
    r.delta = delta;
    r.theta = theta;
    r.beta = beta;
    fill_threshold(r);
    return r;
}

ThresholdReport regularity_threshold_limit(int d) {
    if (d < 2) throw Error(ErrorCode::invalid_argument, "dimension must be >= 2");
    ThresholdReport r;
    r.d = d;
    r.theta = max(Rational(6 - d, 4 * (d - 1)), Rational(0));
    fill_threshold(r);
    if (r.theta_opt > Rational(0)) r.s_min = r.s_limit;
    r.feasible = r.s_min < Rational(1);
    return r;
}

} // namespace kglab
