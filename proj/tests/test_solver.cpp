#include "doctest.h"

#include <cmath>
#include <random>

#include "kglab/solver.hpp"

using namespace kglab;

namespace {

RealField smooth_random(const TorusGrid& g, std::uint64_t seed, double cut, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    RealField f(g);
    for (auto& x : f.v) x = nd(rng);
    auto s = forward_transform(f);
    apply_real_multiplier(s, [&](const double* xi) {
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += xi[a] * xi[a];
        return r2 < cut * cut ? 1.0 : 0.0;
    });
    auto out = inverse_real(s);
    out *= amp / lp_norm(out, kInf);
    return out;
}

double max_abs_diff(const RealField& a, const RealField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double state_distance(const StatePair& a, const StatePair& b) {
    RealField u = a.u, v = a.ut;
    u -= b.u;
    v -= b.ut;
    return std::hypot(lp_norm(u, 2), lp_norm(v, 2));
}

} // namespace

TEST_CASE("model basics") {
    NonlinearModel m(2, 3);
    CHECK(m.apply(-2.0) == -8.0);
    CHECK(NonlinearModel(1, 2.5).apply(-4.0) == doctest::Approx(-32.0));
    CHECK(NonlinearModel(2, 1).apply(3.0) == 0.0);
    CHECK(NonlinearModel::critical(4).p == 3.0);
    CHECK(NonlinearModel::critical(5).p == doctest::Approx(7.0 / 3));
    CHECK_THROWS_AS(NonlinearModel::critical(2), Error);
    CHECK_THROWS_AS(NonlinearModel(2, 0.5), Error);
    CHECK(energy_forcing_exponent(3) == kInf);
    CHECK(energy_forcing_exponent(2) == doctest::Approx(6));
    CHECK(energy_forcing_exponent(1) == doctest::Approx(2));
    CHECK_THROWS_AS(energy_forcing_exponent(5), Error);
}

TEST_CASE("energy functional") {
    TorusGrid g(2, 32, 32.0);
    NonlinearModel m(2, 3);
    CHECK(energy(StatePair(g), m).total == 0.0);

    TorusGrid g4(4, 4, 8 * kPi);
    RealField one(g4);
    for (auto& x : one.v) x = 1.0;
    double V = std::pow(g4.L, 4);
    auto e = energy(StatePair(one, RealField(g4)), NonlinearModel::critical(4));
    CHECK(e.total == doctest::Approx(0.75 * V).epsilon(1e-12));

    auto r = energy(StatePair(smooth_random(g, 1, 3.0), smooth_random(g, 2, 3.0)), m);
    CHECK(r.total > 0);
    CHECK(r.total == doctest::Approx(r.kinetic + r.linear + r.potential));
}

TEST_CASE("Strang step") {
    TorusGrid g(2, 64, 32.0);
    NonlinearModel m(2, 3);
    auto z = step_strang(StatePair(g), 1e-2, m);
    CHECK(lp_norm(z.u, kInf) == 0.0);
    CHECK(lp_norm(z.ut, kInf) == 0.0);

    StatePair st(smooth_random(g, 3, 4.0), smooth_random(g, 4, 4.0));
    auto lin = step_strang(st, 1e-2, NonlinearModel(2, 1));
    CHECK(state_distance(lin, evolve_pair(st, 1e-2)) < 1e-6);

    CHECK_THROWS_AS(step_strang(st, 0.5, m), Error);
    CHECK_THROWS_AS(step_strang(st, -1e-3, m), Error);

    // one-step defect against a fine-step reference is third order
    auto defect = [&](double dt) {
        StrangStepper fine(g, m);
        auto ref = fine.integrate(st, 0, dt / 64, 64).states.back();
        return state_distance(step_strang(st, dt, m), ref);
    };
    double r = defect(0.04) / defect(0.02);
    CHECK(r > 6.0);
    CHECK(r < 10.0);
}

TEST_CASE("unforced energy conservation") {
    TorusGrid g(2, 64, 32.0);
    for (double p : {3.0, 5.0}) {
        NonlinearModel m(2, p);
        StatePair st(smooth_random(g, 5, 3.0), smooth_random(g, 6, 3.0, 0.5));
        StrangStepper stepper(g, m);
        auto tr = stepper.integrate(st, 0, 2e-3, 5000, 500);
        double e0 = energy(tr.states.front(), m).total, drift = 0;
        for (const auto& s : tr.states) drift = std::max(drift, std::abs(energy(s, m).total / e0 - 1));
        CHECK(drift < 1e-6);
    }
}

TEST_CASE("contraction solver") {
    TorusGrid g(2, 32, 32.0);
    NonlinearModel m(2, 3);
    auto zero = local_solve_contraction(StatePair(g), m, {}, 0, 1e-2, 20);
    CHECK(zero.report.iterations == 1);
    CHECK(zero.report.converged);

    StatePair st(smooth_random(g, 7, 3.0, 0.3), smooth_random(g, 8, 3.0, 0.3));
    auto fp = local_solve_contraction(st, m, {}, 0, 1e-3, 500);
    CHECK(fp.report.converged);
    auto strang = StrangStepper(g, m).integrate(st, 0, 1e-3, 500);
    CHECK(s_distance(fp.trajectory, strang) < 1e-3);

    StatePair mid(smooth_random(g, 7, 3.0, 1.0), smooth_random(g, 8, 3.0, 1.0));
    auto it = local_solve_contraction(mid, m, {}, 0, 1e-3, 1000);
    const auto& f = it.report.factors;
    REQUIRE(f.size() >= 3);
    for (double x : f) CHECK(x < 1.0);
    // distances stay under the geometric envelope d_1 * f_1^(n-1)
    const auto& dist = it.report.distances;
    for (std::size_t n = 1; n < dist.size(); ++n)
        CHECK(dist[n] <= dist[0] * std::pow(f[0], double(n)) * (1 + 1e-9));

    StatePair big(smooth_random(g, 9, 3.0, 6.0), smooth_random(g, 10, 3.0, 6.0));
    try {
        local_solve_contraction(big, m, {}, 0, 1e-2, 200);
        FAIL("large data accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::interval_too_large);
    }
    try {
        local_solve_contraction(st, m, {}, 0, 1e-2, 20, 1e-6);
        FAIL("eta check skipped");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::interval_too_large);
    }
}

TEST_CASE("Duhamel residual") {
    TorusGrid g(2, 32, 32.0);
    StatePair st(smooth_random(g, 11, 3.0, 0.3), smooth_random(g, 12, 3.0, 0.3));
    NonlinearModel lin(2, 1);
    auto tl = StrangStepper(g, lin).integrate(st, 0, 1e-2, 100);
    CHECK(duhamel_residual(tl, {}) < 1e-9);

    NonlinearModel m(2, 3);
    auto tz = StrangStepper(g, m).integrate(StatePair(g), 0, 1e-2, 10);
    CHECK(duhamel_residual(tz, {}) == 0.0);

    Forcing F = [&, h = smooth_random(g, 13, 2.0, 0.2)](double t) {
        RealField x = h;
        x *= std::cos(3 * t);
        return x;
    };
    auto r1 = duhamel_residual(StrangStepper(g, m, F).integrate(st, 0, 1e-3, 1000), F);
    auto r2 = duhamel_residual(StrangStepper(g, m, F).integrate(st, 0, 5e-4, 2000), F);
    CHECK(r1 < 1e-4);
    CHECK(r1 / r2 > 3.5);

    auto coarse = StrangStepper(g, m).integrate(st, 0, 2e-2, 10);
    CHECK_THROWS_AS(duhamel_residual(coarse, {}), Error);
}

TEST_CASE("energy derivative inequality and Gronwall bounds") {
    TorusGrid g(2, 32, 32.0);
    NonlinearModel m(2, 3);
    StatePair st(smooth_random(g, 14, 3.0, 0.5), smooth_random(g, 15, 3.0, 0.5));
    std::vector<double> chat;
    for (double amp : {0.1, 0.2, 0.4}) {
        Forcing F = [&, amp, h = smooth_random(g, 16, 2.0, 1.0)](double t) {
            RealField x = h;
            x *= amp * std::cos(2 * t);
            return x;
        };
        auto s = forced_energy_series(st, m, F, 2e-3, 1000);
        auto chk = energy_derivative_check(s, m.p, 100);
        CHECK(chk.ratio.size() == 100);
        CHECK(std::isfinite(chk.c_hat));
        CHECK(chk.c_hat > 0);
        chat.push_back(chk.c_hat);
    }
    CHECK(gronwall_verdict(chat).spread >= 1.0);

    EnergySeries flat;
    for (int j = 0; j <= 10; ++j) {
        flat.t.push_back(0.1 * j);
        flat.e.push_back(2.0);
        for (auto* v : {&flat.f_r1, &flat.f_2p, &flat.f_inf, &flat.f_10}) v->push_back(0.0);
    }
    for (int d : {4, 5}) {
        auto b = gronwall_bound(d, flat);
        for (double x : b.bound) CHECK(x == 2.0);
        CHECK(b.c_hat == 1.0);
    }
    EnergySeries f1 = flat, f2 = flat;
    for (std::size_t j = 0; j < f1.t.size(); ++j)
        for (auto pr : {std::pair{&f1.f_2p, &f2.f_2p}, std::pair{&f1.f_inf, &f2.f_inf}, std::pair{&f1.f_10, &f2.f_10}}) {
            (*pr.first)[j] = 0.3 + 0.1 * j;
            (*pr.second)[j] = 2 * (0.3 + 0.1 * j);
        }
    for (int d : {4, 5}) {
        auto b1 = gronwall_bound(d, f1), b2 = gronwall_bound(d, f2);
        for (std::size_t j = 0; j < b1.bound.size(); ++j) CHECK(b2.bound[j] >= b1.bound[j]);
    }
    CHECK_THROWS_AS(gronwall_bound(3, flat), Error);
    CHECK(gronwall_verdict({1.0, 1.5}).pass);
    CHECK_FALSE(gronwall_verdict({1.0, 2.5}).pass);
}

TEST_CASE("Strichartz interval partition") {
    std::vector<double> t, zero, unif;
    for (int j = 0; j <= 100000; ++j) {
        t.push_back(1e-4 * j);
        zero.push_back(0.0);
        unif.push_back(2.0);
    }
    CHECK(partition_by_strichartz(t, zero, 3, 0.1).size() == 1);
    double total = std::pow(8.0 * 10, 1.0 / 3);
    CHECK(partition_by_strichartz(t, unif, 3, total * 1.001).size() == 1);
    for (double eta : {1.0, 1.7, 2.5}) {
        auto parts = partition_by_strichartz(t, unif, 3, eta);
        double expect = std::pow(total / eta, 3);
        CHECK(std::abs(double(parts.size()) - std::ceil(expect)) <= 1.0);
        for (const auto& p : parts) CHECK(p.norm <= eta + 1e-12);
        CHECK(parts.front().a == 0.0);
        CHECK(parts.back().b == doctest::Approx(10.0));
        for (std::size_t i = 1; i < parts.size(); ++i) CHECK(parts[i].a == parts[i - 1].b);
    }
}
