#include "kglab/solver.hpp"

#include <algorithm>
#include <cmath>

namespace kglab {

NonlinearModel::NonlinearModel(int d_, double p_) : d(d_), p(p_) {
    if (d < 1) throw Error(ErrorCode::invalid_argument, "dimension must be >= 1");
    if (!(p >= 1) || !std::isfinite(p)) throw Error(ErrorCode::invalid_argument, "power must be finite and >= 1");
}

NonlinearModel NonlinearModel::critical(int d) {
    if (d < 3) throw Error(ErrorCode::invalid_argument, "critical power needs d >= 3");
    return NonlinearModel(d, (d + 2.0) / (d - 2.0));
}

double NonlinearModel::apply(double u) const {
    if (linear()) return 0.0;
    if (p == 3.0) return u * u * u;
    if (p == 5.0) return u * u * u * u * u;
    return std::pow(std::abs(u), p - 1) * u;
}

EnergyRecord energy(const StatePair& s, const NonlinearModel& m, double t) {
    EnergyRecord r;
    r.t = t;
    double k = lp_norm(s.ut, 2), h = sobolev_norm(s.u, 1.0);
    r.kinetic = 0.5 * k * k;
    r.linear = 0.5 * h * h;
    if (!m.linear()) {
        double acc = 0;
        for (double x : s.u.v) acc += std::pow(std::abs(x), m.p + 1);
        r.potential = acc * s.grid().cell_volume() / (m.p + 1);
    }
    r.total = r.kinetic + r.linear + r.potential;
    return r;
}

namespace {

void require_finite(const RealField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) throw Error(ErrorCode::divergence, "non-finite sample");
}

void half_flow(const PairFlow& flow, StatePair& s, double t) {
    auto u = forward_transform(s.u);
    auto ut = forward_transform(s.ut);
    flow.apply(u, ut, t);
    s.u = inverse_real(u);
    s.ut = inverse_real(ut);
}

RealField nonlinear_term(const RealField& u, const RealField* F, const NonlinearModel& m) {
    RealField out(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = m.apply(u[i] + (F ? (*F)[i] : 0.0));
    return out;
}

} // namespace

StrangStepper::StrangStepper(const TorusGrid& g, NonlinearModel m, Forcing f)
    : flow_(g), model_(m), forcing_(std::move(f)) {}

StatePair StrangStepper::step(const StatePair& s, double t, double dt) const {
    if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    if (!model_.linear()) {
        double umax = lp_norm(s.u, kInf);
        double cap = 0.1 / (1 + std::pow(umax, model_.p - 1));
        if (dt > cap)
            throw Error(ErrorCode::invalid_argument,
                        "dt " + std::to_string(dt) + " above splitting limit " + std::to_string(cap));
    }
    StatePair out = s;
    if (model_.linear()) {
        half_flow(flow_, out, dt);
    } else {
        half_flow(flow_, out, 0.5 * dt);
        RealField F;
        if (forcing_) F = forcing_(t + 0.5 * dt);
        auto nl = nonlinear_term(out.u, forcing_ ? &F : nullptr, model_);
        for (std::size_t i = 0; i < nl.size(); ++i) out.ut[i] -= dt * nl[i];
        half_flow(flow_, out, 0.5 * dt);
    }
    require_finite(out.u);
    require_finite(out.ut);
    return out;
}

namespace {

struct Rotation {
    std::vector<double> c, s, w;

    Rotation(const std::vector<double>& omega, double t) : c(omega.size()), s(omega.size()), w(omega) {
        for (std::size_t i = 0; i < omega.size(); ++i) {
            c[i] = std::cos(t * omega[i]);
            s[i] = std::sin(t * omega[i]);
        }
    }
    void apply(SpectralField& u, SpectralField& ut) const {
        for (std::size_t i = 0; i < c.size(); ++i) {
            cplx a = u.c[i], b = ut.c[i];
            u.c[i] = c[i] * a + (s[i] / w[i]) * b;
            ut.c[i] = -w[i] * s[i] * a + c[i] * b;
        }
    }
};

} // namespace

// Adjacent half flows of consecutive steps are fused, so the state stays spectral and each
// step costs one inverse and one forward transform.
Trajectory StrangStepper::integrate(const StatePair& s, double t0, double dt, int steps, int stride) const {
    if (steps < 0 || stride < 1) throw Error(ErrorCode::invalid_argument, "bad step count or stride");
    if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    Trajectory tr;
    tr.model = model_;
    tr.dt = dt * stride;
    tr.t.push_back(t0);
    tr.states.push_back(s);
    if (steps % stride) tr.dt = 0;  // last interval is shorter
    if (steps == 0) return tr;

    auto check_limit = [&](const RealField& u) {
        if (model_.linear()) return;
        double cap = 0.1 / (1 + std::pow(lp_norm(u, kInf), model_.p - 1));
        if (dt > cap)
            throw Error(ErrorCode::invalid_argument,
                        "dt " + std::to_string(dt) + " above splitting limit " + std::to_string(cap));
    };
    check_limit(s.u);
    Rotation full(flow_.omega, dt), half(flow_.omega, 0.5 * dt);
    auto u = forward_transform(s.u);
    auto ut = forward_transform(s.ut);
    auto emit = [&](int j, const SpectralField& a, const SpectralField& b) {
        StatePair out(inverse_real(a), inverse_real(b));
        require_finite(out.u);
        require_finite(out.ut);
        tr.t.push_back(t0 + j * dt);
        tr.states.push_back(std::move(out));
    };

    if (model_.linear()) {
        for (int j = 1; j <= steps; ++j) {
            full.apply(u, ut);
            if (j % stride == 0 || j == steps) emit(j, u, ut);
        }
        return tr;
    }
    half.apply(u, ut);
    for (int j = 1; j <= steps; ++j) {
        auto phys = inverse_real(u);
        require_finite(phys);
        if (j > 1) check_limit(phys);
        RealField F;
        if (forcing_) F = forcing_(t0 + (j - 0.5) * dt);
        auto nl = forward_transform(nonlinear_term(phys, forcing_ ? &F : nullptr, model_));
        for (std::size_t i = 0; i < ut.size(); ++i) ut.c[i] -= dt * nl.c[i];
        if (j % stride == 0 || j == steps) {
            SpectralField a = u, b = ut;
            half.apply(a, b);
            emit(j, a, b);
        }
        if (j < steps) full.apply(u, ut);
    }
    return tr;
}

StatePair step_strang(const StatePair& s, double dt, const NonlinearModel& m, const Forcing& f, double t) {
    return StrangStepper(s.grid(), m, f).step(s, t, dt);
}

namespace {

// Duhamel map on the uniform grid t0 + j dt given u samples and optional forcing samples.
std::vector<StatePair> duhamel_from_samples(const StatePair& data, const NonlinearModel& m, double dt,
                                            const std::vector<RealField>& u, const std::vector<RealField>* F,
                                            bool velocity) {
    const auto& g = data.grid();
    auto omega = bracket_symbol(g);
    auto u0 = forward_transform(data.u);
    auto u1 = forward_transform(data.ut);
    std::vector<cplx> A(g.size()), B(g.size()), prevN;
    std::vector<StatePair> out;
    out.reserve(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        double s = j * dt;
        if (!m.linear()) {
            auto nl = forward_transform(nonlinear_term(u[j], F ? &(*F)[j] : nullptr, m));
            for (std::size_t i = 0; i < g.size(); ++i) {
                double c = std::cos(s * omega[i]), sn = std::sin(s * omega[i]);
                if (j > 0) {
                    A[i] += 0.5 * dt * c * nl.c[i];
                    B[i] += 0.5 * dt * sn * nl.c[i];
                }
            }
            if (j > 0) {
                double sp = (j - 1) * dt;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    A[i] += 0.5 * dt * std::cos(sp * omega[i]) * prevN[i];
                    B[i] += 0.5 * dt * std::sin(sp * omega[i]) * prevN[i];
                }
            }
            prevN = std::move(nl.c);
        }
        SpectralField uh(g), vh(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double w = omega[i], c = std::cos(s * w), sn = std::sin(s * w);
            uh.c[i] = c * u0.c[i] + sn / w * u1.c[i] - (sn * A[i] - c * B[i]) / w;
            if (velocity) vh.c[i] = -w * sn * u0.c[i] + c * u1.c[i] - (c * A[i] + sn * B[i]);
        }
        out.emplace_back(inverse_real(uh), velocity ? inverse_real(vh) : RealField(g));
    }
    return out;
}

std::vector<RealField> sample_forcing(const Forcing& f, double t0, double dt, std::size_t count) {
    std::vector<RealField> F;
    F.reserve(count);
    for (std::size_t j = 0; j < count; ++j) F.push_back(f(t0 + j * dt));
    return F;
}

double s_norm_of(const std::vector<RealField>& u, const NonlinearModel& m, double t0, double dt) {
    std::vector<double> ts, lr;
    for (std::size_t j = 0; j < u.size(); ++j) {
        ts.push_back(t0 + j * dt);
        lr.push_back(lp_norm(u[j], m.s_space()));
    }
    if (ts.size() < 2) return 0.0;
    return mixed_norm_profile(ts, lr, m.s_time(), ts.front(), ts.back());
}

double s_norm_diff(const std::vector<RealField>& a, const std::vector<RealField>& b, const NonlinearModel& m,
                   double t0, double dt) {
    std::vector<RealField> d;
    d.reserve(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        RealField x = a[j];
        x -= b[j];
        d.push_back(std::move(x));
    }
    return s_norm_of(d, m, t0, dt);
}

} // namespace

ContractionResult local_solve_contraction(const StatePair& data, const NonlinearModel& m, const Forcing& f,
                                          double t0, double dt, int steps, double eta, double tol, int max_iter) {
    if (!(dt > 0) || steps < 1) throw Error(ErrorCode::invalid_interval, "empty interval");
    std::size_t count = static_cast<std::size_t>(steps) + 1;
    std::vector<RealField> F;
    if (f) F = sample_forcing(f, t0, dt, count);
    const std::vector<RealField>* Fp = f ? &F : nullptr;

    ContractionResult res;
    auto& rep = res.report;
    std::vector<RealField> zero(count, RealField(data.grid()));
    auto free = duhamel_from_samples(data, NonlinearModel(m.d, 1.0), dt, zero, nullptr, false);
    std::vector<RealField> cur;
    cur.reserve(count);
    for (auto& s : free) cur.push_back(std::move(s.u));
    rep.free_norm = s_norm_of(cur, m, t0, dt);
    rep.forcing_norm = f ? s_norm_of(F, m, t0, dt) : 0.0;
    if (eta > 0 && rep.free_norm + rep.forcing_norm > eta)
        throw Error(ErrorCode::interval_too_large, "free and forcing S-norms exceed eta");

    for (int it = 1; it <= max_iter; ++it) {
        auto next = duhamel_from_samples(data, m, dt, cur, Fp, false);
        std::vector<RealField> nu;
        nu.reserve(count);
        for (auto& s : next) nu.push_back(std::move(s.u));
        double dist = s_norm_diff(nu, cur, m, t0, dt);
        for (const auto& x : nu) require_finite(x);
        rep.distances.push_back(dist);
        if (rep.distances.size() >= 2 && rep.distances[rep.distances.size() - 2] > 0)
            rep.factors.push_back(dist / rep.distances[rep.distances.size() - 2]);
        if (rep.factors.size() == 1 && rep.factors[0] > 0.5)
            throw Error(ErrorCode::interval_too_large,
                        "measured contraction factor " + std::to_string(rep.factors[0]) + " exceeds 1/2");
        cur = std::move(nu);
        rep.iterations = it;
        if (dist < tol) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged) throw Error(ErrorCode::divergence, "Picard iteration did not converge");

    auto fin = duhamel_from_samples(data, m, dt, cur, Fp, true);
    auto& tr = res.trajectory;
    tr.model = m;
    tr.dt = dt;
    for (std::size_t j = 0; j < count; ++j) {
        tr.t.push_back(t0 + j * dt);
        tr.states.push_back(StatePair(std::move(cur[j]), std::move(fin[j].ut)));
    }
    return res;
}

namespace {

void require_uniform(const Trajectory& traj) {
    if (traj.states.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
    if (traj.states.size() == 1) return;
    double dt = traj.t[1] - traj.t[0];
    for (std::size_t j = 1; j < traj.t.size(); ++j)
        if (std::abs(traj.t[j] - traj.t[j - 1] - dt) > 1e-9 * std::max(1.0, std::abs(traj.t[j])))
            throw Error(ErrorCode::invalid_argument, "trajectory step is not uniform");
    if (dt > 1e-2 + 1e-15) throw Error(ErrorCode::invalid_argument, "trajectory too coarse for Duhamel quadrature");
}

} // namespace

std::vector<StatePair> duhamel_map(const Trajectory& traj, const Forcing& f) {
    require_uniform(traj);
    double dt = traj.states.size() > 1 ? traj.t[1] - traj.t[0] : 0.0;
    std::vector<RealField> u;
    for (const auto& s : traj.states) u.push_back(s.u);
    std::vector<RealField> F;
    if (f) F = sample_forcing(f, traj.t[0], dt, u.size());
    return duhamel_from_samples(traj.states[0], traj.model, dt, u, f ? &F : nullptr, true);
}

double duhamel_residual(const Trajectory& traj, const Forcing& f) {
    auto d = duhamel_map(traj, f);
    double r = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        RealField x = traj.states[j].u;
        x -= d[j].u;
        r = std::max(r, lp_norm(x, 2));
    }
    return r;
}

double s_distance(const Trajectory& a, const Trajectory& b) {
    if (a.t.size() != b.t.size() || a.t.size() < 2) throw Error(ErrorCode::invalid_argument, "time grids differ");
    std::vector<double> lr;
    for (std::size_t j = 0; j < a.t.size(); ++j) {
        if (std::abs(a.t[j] - b.t[j]) > 1e-9 * std::max(1.0, std::abs(a.t[j])))
            throw Error(ErrorCode::invalid_argument, "time grids differ");
        RealField x = a.states[j].u;
        x -= b.states[j].u;
        lr.push_back(lp_norm(x, a.model.s_space()));
    }
    return mixed_norm_profile(a.t, lr, a.model.s_time(), a.t.front(), a.t.back());
}

double energy_forcing_exponent(double p) {
    if (!(p >= 1) || p > 3) throw Error(ErrorCode::invalid_argument, "energy derivative bound needs 1 <= p <= 3");
    if (p == 3) return kInf;
    return 2 * (p + 1) / (3 - p);
}

EnergySeries forced_energy_series(const StatePair& s, const NonlinearModel& m, const Forcing& f, double dt,
                                  int steps, int stride) {
    double r1 = energy_forcing_exponent(m.p);
    StrangStepper stepper(s.grid(), m, f);
    auto tr = stepper.integrate(s, 0.0, dt, steps, stride);
    EnergySeries out;
    for (std::size_t j = 0; j < tr.t.size(); ++j) {
        out.t.push_back(tr.t[j]);
        out.e.push_back(energy(tr.states[j], m, tr.t[j]).total);
        RealField F = f ? f(tr.t[j]) : RealField(s.grid());
        out.f_r1.push_back(lp_norm(F, r1));
        out.f_2p.push_back(lp_norm(F, 2 * m.p));
        out.f_inf.push_back(lp_norm(F, kInf));
        out.f_10.push_back(lp_norm(F, 10));
    }
    return out;
}

DerivativeCheck energy_derivative_check(const EnergySeries& s, double p, int checkpoints) {
    std::size_t n = s.t.size();
    if (n < 3 || checkpoints < 1) throw Error(ErrorCode::insufficient_points, "series too short");
    DerivativeCheck out;
    double a = 0.5 + (p - 1) / (p + 1);
    for (int c = 0; c < checkpoints; ++c) {
        std::size_t j = 1 + static_cast<std::size_t>(std::llround(double(c) * (n - 3) / std::max(1, checkpoints - 1)));
        double de = (s.e[j + 1] - s.e[j - 1]) / (s.t[j + 1] - s.t[j - 1]);
        double rhs = std::pow(s.e[j], a) * s.f_r1[j] + std::sqrt(s.e[j]) * std::pow(s.f_2p[j], p);
        out.t.push_back(s.t[j]);
        out.de.push_back(de);
        out.rhs.push_back(rhs);
        double ratio = rhs > 0 ? std::abs(de) / rhs : (de == 0 ? 0.0 : kInf);
        out.ratio.push_back(ratio);
        out.c_hat = std::max(out.c_hat, ratio);
    }
    return out;
}

GronwallResult gronwall_bound(int d, const EnergySeries& s) {
    if (d != 4 && d != 5) throw Error(ErrorCode::invalid_argument, "integrated Gronwall bounds exist for d = 4, 5");
    if (s.t.empty()) throw Error(ErrorCode::insufficient_points, "empty series");
    double p = (d + 2.0) / (d - 2.0);
    GronwallResult out;
    double sq = 0, l1inf = 0, l1ten = 0;
    for (std::size_t j = 0; j < s.t.size(); ++j) {
        if (j > 0) {
            double h = s.t[j] - s.t[j - 1];
            sq += 0.5 * h * (std::pow(s.f_2p[j], p) + std::pow(s.f_2p[j - 1], p));
            l1inf += 0.5 * h * (s.f_inf[j] + s.f_inf[j - 1]);
            l1ten += 0.5 * h * (s.f_10[j] + s.f_10[j - 1]);
        }
        double S = std::pow(sq, 1 / p);
        double b = d == 4 ? (s.e[0] + std::pow(S, 6)) * (1 + l1inf * std::exp(l1inf))
                          : s.e[0] + std::pow(S, 14.0 / 3) + std::pow(l1ten, 10);
        out.bound.push_back(b);
        double r = b > 0 ? s.e[j] / b : 0.0;
        out.ratio.push_back(r);
        out.c_hat = std::max(out.c_hat, r);
    }
    return out;
}

GronwallVerdict gronwall_verdict(const std::vector<double>& c_hats, double max_spread) {
    GronwallVerdict v;
    if (c_hats.empty()) return v;
    double lo = *std::min_element(c_hats.begin(), c_hats.end());
    double hi = *std::max_element(c_hats.begin(), c_hats.end());
    v.spread = lo > 0 ? hi / lo : kInf;
    v.pass = std::isfinite(v.spread) && v.spread < max_spread;
    return v;
}

std::vector<TimeInterval> partition_by_strichartz(const std::vector<double>& t, const std::vector<double>& lr,
                                                  double q, double eta) {
    if (!(eta > 0)) throw Error(ErrorCode::invalid_argument, "eta must be positive");
    if (t.size() != lr.size() || t.size() < 2) throw Error(ErrorCode::invalid_argument, "bad profile");
    if (!(q >= 1)) throw Error(ErrorCode::invalid_argument, "time exponent must be >= 1");
    double cap = std::pow(eta, q);
    std::vector<TimeInterval> out;
    std::size_t start = 0;
    double mass = 0;
    for (std::size_t j = 1; j < t.size(); ++j) {
        double seg = 0.5 * (t[j] - t[j - 1]) * (std::pow(lr[j], q) + std::pow(lr[j - 1], q));
        if (mass + seg > cap && j - 1 > start) {
            out.push_back({t[start], t[j - 1], std::pow(mass, 1 / q)});
            start = j - 1;
            mass = 0;
        }
        mass += seg;
    }
    out.push_back({t[start], t.back(), std::pow(mass, 1 / q)});
    return out;
}

} // namespace kglab
