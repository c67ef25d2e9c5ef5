#include "doctest.h"

#include <cmath>
#include <random>

#include "kglab/propagator.hpp"

using namespace kglab;

namespace {

RealField smooth_random(const TorusGrid& g, std::uint64_t seed, double cut) {
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
    return inverse_real(s);
}

template <class F>
double max_abs_diff(const F& a, const F& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> geom(double a, double b, int n) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(a * std::pow(b / a, double(i) / (n - 1)));
    return t;
}

} // namespace

TEST_CASE("half-wave flow basics") {
    TorusGrid g(2, 64, 32.0);
    auto f = smooth_random(g, 1, 6.0);
    auto id = evolve_half_wave(f, 0.0);
    CHECK(max_abs_diff(id, complexify(f)) < 1e-12 * lp_norm(f, kInf));

    RealField one(g);
    for (auto& x : one.v) x = 1.0;
    for (int sign : {1, -1}) {
        auto e = evolve_half_wave(one, 0.7, sign);
        cplx expect = std::polar(1.0, sign * 0.7);
        double err = 0;
        for (const auto& z : e.v) err = std::max(err, std::abs(z - expect));
        CHECK(err < 1e-12);
    }

    auto s = forward_transform(f);
    auto a = evolve_half_wave(evolve_half_wave(s, 0.3), 0.4);
    auto b = evolve_half_wave(s, 0.7);
    double err = 0, mx = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        err = std::max(err, std::abs(a.c[i] - b.c[i]));
        mx = std::max(mx, std::abs(b.c[i]));
    }
    CHECK(err < 1e-12 * mx);

    for (double t : {0.5, 3.0, 40.0}) {
        auto u = evolve_half_wave(f, t, -1);
        CHECK(std::abs(lp_norm(u, 2) / lp_norm(f, 2) - 1) < 1e-12);
    }
}

TEST_CASE("pair flow") {
    TorusGrid g(2, 64, 32.0);
    StatePair st(smooth_random(g, 2, 5.0), smooth_random(g, 3, 5.0));
    auto id = evolve_pair(st, 0.0);
    CHECK(max_abs_diff(id.u, st.u) < 1e-12 * lp_norm(st.u, kInf));
    CHECK(max_abs_diff(id.ut, st.ut) < 1e-12 * lp_norm(st.ut, kInf));

    auto back = evolve_pair(evolve_pair(st, 2.3), -2.3);
    CHECK(max_abs_diff(back.u, st.u) < 1e-11 * lp_norm(st.u, kInf));
    CHECK(max_abs_diff(back.ut, st.ut) < 1e-11 * lp_norm(st.ut, kInf));

    double e0 = linear_energy(st);
    for (double t = 0.5; t <= 10.0; t += 0.5) CHECK(std::abs(linear_energy(evolve_pair(st, t)) / e0 - 1) < 1e-12);

    // zero mode: u(t) = cos(t) u0
    RealField c(g);
    for (auto& x : c.v) x = 2.0;
    auto z = evolve_pair(StatePair(c, RealField(g)), 1.1);
    CHECK(std::abs(z.u[17] - 2 * std::cos(1.1)) < 1e-12);
    CHECK(std::abs(z.ut[5] + 2 * std::sin(1.1)) < 1e-12);

    // single plane wave cos(xi0 x) evolves with frequency <xi0>
    TorusGrid g1(1, 128, 32.0);
    double xi0 = 5 * g1.dxi(), w = std::sqrt(1 + xi0 * xi0), t = 3.7;
    auto u0 = sample(g1, [&](const double* x) { return std::cos(xi0 * x[0]); });
    auto v0 = sample(g1, [&](const double* x) { return std::sin(xi0 * x[0]); });
    auto out = evolve_pair(StatePair(u0, v0), t);
    auto expect = sample(g1, [&](const double* x) {
        return std::cos(t * w) * std::cos(xi0 * x[0]) + std::sin(t * w) / w * std::sin(xi0 * x[0]);
    });
    CHECK(max_abs_diff(out.u, expect) < 1e-12);
}

TEST_CASE("decay probe normalization against a physical-space construction") {
    TorusGrid g(2, 512, 64.0);
    auto ts = std::vector<double>{0.0};
    auto res = measure_cell_decay(g, {0, 0}, kInf, ts);
    double w = 0.5;
    auto gauss = sample(g, [&](const double* x) { return std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2 * w * w)); });
    auto p = project_frequency_cell(gauss, {0, 0});
    CHECK(std::abs(res.ratio[0] - lp_norm(p, kInf) / lp_norm(gauss, 1)) < 1e-9);

    auto r2 = measure_cell_decay(g, {2, 1}, 2.0, {0.0, 1.0, 4.0, 9.0});
    auto p2 = project_frequency_cell(gauss, {0, 0});
    for (double v : r2.ratio) CHECK(std::abs(v / (lp_norm(p2, 2) / lp_norm(gauss, 2)) - 1) < 1e-9);
    CHECK(r2.predicted_wave == 0.0);
    CHECK(r2.predicted_kg == 0.0);
}

TEST_CASE("r = 2 decay table is flat") {
    TorusGrid g(2, 128, 128.0);
    auto res = measure_cell_decay(g, {3, 0}, 2.0, geom(1, 40, 12));
    for (double v : res.ratio) CHECK(std::abs(v / res.ratio[0] - 1) < 1e-12);
    CHECK(std::isnan(res.crossover));
}

TEST_CASE("one-dimensional Klein-Gordon decay rate") {
    TorusGrid g(1, 1024, 1024.0);
    DecayOptions o;
    o.fit_lo = 40;
    o.fit_hi = 400;
    auto res = measure_cell_decay(g, {0}, kInf, geom(1, 400, 40), o);
    CHECK(res.predicted_kg == doctest::Approx(-0.5));
    CHECK(res.custom.slope == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("decay wrap-around precondition") {
    TorusGrid g(2, 64, 32.0);
    CHECK_THROWS_AS(measure_cell_decay(g, {0, 0}, kInf, {0.0, 100.0}), Error);
    try {
        measure_cell_decay(g, {0, 0}, kInf, {0.0, 100.0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::wraparound);
    }
    CHECK_THROWS_AS(measure_cell_decay(g, {0, 0}, 1.5, {0.0}), Error);
}

TEST_CASE("Strichartz classification") {
    CHECK(classify_strichartz(kInf, 2, 3) == StrichartzBranch::admissible);
    CHECK(predicted_strichartz_exponent(kInf, 2, 3) == 0.0);
    CHECK(classify_strichartz(4, kInf, 3) == StrichartzBranch::admissible);
    CHECK(predicted_strichartz_exponent(4, kInf, 3) == doctest::Approx(0.25));
    CHECK(classify_strichartz(4, 4, 2) == StrichartzBranch::sub_admissible);
    CHECK(predicted_strichartz_exponent(4, 4, 2) == doctest::Approx(0.5));
    CHECK(predicted_strichartz_exponent(4, 6, 2) == doctest::Approx(0.75 - 1.0 / 3));
    CHECK(classify_strichartz(8, 4, 2) == StrichartzBranch::admissible);

    for (int d : {2, 3}) {
        try {
            classify_strichartz(2, kInf, d);
            FAIL("endpoint accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::excluded_endpoint);
        }
    }
    CHECK_THROWS_AS(classify_strichartz(2, 2, 2), Error);
    CHECK_THROWS_AS(classify_strichartz(4, 4, 1), Error);
}

TEST_CASE("Strichartz isometry case has zero growth") {
    StrichartzOptions o;
    o.Ks = {1, 2, 4};
    o.time_samples = 16;
    auto res = measure_cell_strichartz(2, kInf, 2, o);
    for (const auto& c : res.cells) CHECK(std::abs(c.norm - 1) < 1e-12);
    CHECK(std::abs(res.exponent) < 1e-10);
    CHECK(res.predicted == 0.0);
}

TEST_CASE("infinity-to-q transfer") {
    TorusGrid g(2, 512, 64.0);
    CHECK_THROWS_AS(verify_infty_transfer(RealField(g), {1}, 8, 4, 10), Error);

    auto f = sample(g, [](const double* x) { return std::exp(-2 * (x[0] * x[0] + x[1] * x[1])); });
    // the L^2 profile is constant, so the ratio is (N T)^{-1/q}
    auto iso = verify_infty_transfer(f, {1, 2, 4}, 8, 2, 10, 20);
    for (const auto& row : iso.rows) CHECK(row.ratio == doctest::Approx(std::pow(row.N * 10.0, -1.0 / 8)).epsilon(1e-10));

    auto res = verify_infty_transfer(f, {1, 2, 4, 8}, 8, 4, 10, 100);
    CHECK(res.rows.size() == 4);
    CHECK(res.spread <= 3.0);
}
