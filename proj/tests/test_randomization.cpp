#include "doctest.h"

#include <cmath>
#include <random>

#include "kglab/randomization.hpp"

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

double max_abs_diff(const RealField& a, const RealField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("seed derivation is deterministic and index keyed") {
    RandomSeedPlan p{42, Family::gaussian, false};
    CHECK(p.derive('X', {1, 2}) == p.derive('X', {1, 2}));
    CHECK(p.derive('X', {1, 2}) != p.derive('X', {2, 1}));
    CHECK(p.derive('X', {1, 2}) != p.derive('Y', {1, 2}));
    CHECK(p.derive('X', {1}) != p.derive('X', {1, 0}));
    RandomSeedPlan q{43, Family::gaussian, false};
    CHECK(p.derive('X', {1, 2}) != q.derive('X', {1, 2}));
    CHECK(p.draw_x({3, -1}) == p.draw_x({-3, 1}));
    CHECK(p.draw_x({0, 0}) == p.draw_x({0, 0}));

    auto back = RandomSeedPlan::from_json(p.to_json());
    CHECK(back.base_seed == 42);
    CHECK(back.family == Family::gaussian);
    CHECK_THROWS_AS(parse_family("cauchy"), Error);
}

TEST_CASE("family draws have the documented range") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        double r = draw_from_seed(Family::rademacher, s);
        CHECK((r == 1.0 || r == -1.0));
        double u = draw_from_seed(Family::uniform_symmetric, s);
        CHECK(std::abs(u) <= std::sqrt(3.0));
    }
}

TEST_CASE("degenerate draws reconstruct the band-limited field") {
    TorusGrid g(2, 64, 32.0);
    auto f = smooth_random(g, 1, 8.0);
    auto h = smooth_random(g, 2, 8.0);
    RandomSeedPlan plan{7, Family::rademacher, true};
    const int K = 4;
    auto st = randomize_data(f, h, plan, K);
    auto expect = [&](const RealField& x) {
        auto s = forward_transform(x);
        std::vector<double> m(g.size(), 0.0);
        for (const auto& k : frequency_cells(g, K)) {
            auto w = cell_multiplier(g, k);
            for (std::size_t i = 0; i < m.size(); ++i) m[i] += w[i];
        }
        for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= m[i];
        return inverse_real(s);
    };
    CHECK(max_abs_diff(st.u, expect(f)) < 1e-10);
    CHECK(max_abs_diff(st.ut, expect(h)) < 1e-10);
}

TEST_CASE("zero data and linearity") {
    TorusGrid g(1, 256, 32.0);
    RandomSeedPlan plan{3, Family::gaussian, false};
    auto z = randomize_field(RealField(g), plan, 6);
    CHECK(lp_norm(z, kInf) == 0.0);

    auto f = smooth_random(g, 4, 10.0);
    auto a = randomize_field(f, plan, 6);
    RealField f3 = f;
    f3 *= -2.5;
    auto b = randomize_field(f3, plan, 6);
    RealField a3 = a;
    a3 *= -2.5;
    CHECK(max_abs_diff(a3, b) < 1e-12 * lp_norm(b, kInf));

    auto again = randomize_field(f, plan, 6);
    CHECK(again.v == a.v);
}

TEST_CASE("frequency randomizer is even") {
    TorusGrid g(2, 64, 32.0);
    RandomSeedPlan plan{5, Family::uniform_symmetric, false};
    auto m = frequency_randomizer(g, plan, 3);
    double err = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            std::size_t a = static_cast<std::size_t>(i) * g.n + j;
            std::size_t b = static_cast<std::size_t>((g.n - i) % g.n) * g.n + (g.n - j) % g.n;
            err = std::max(err, std::abs(m[a] - m[b]));
        }
    CHECK(err < 1e-14);
    CHECK_THROWS_AS(frequency_randomizer(g, plan, 12), Error);
}

TEST_CASE("Monte Carlo mean vanishes and L2 isometry holds in expectation") {
    TorusGrid g(1, 256, 32.0);
    auto f = smooth_random(g, 9, 6.0);
    const int K = 6;
    RealField mean(g);
    double energy = 0;
    const int draws = 500;
    for (int d = 0; d < draws; ++d) {
        RandomSeedPlan plan{1000 + static_cast<std::uint64_t>(d), Family::gaussian, false};
        auto r = randomize_field(f, plan, K);
        double n2 = lp_norm(r, 2);
        energy += n2 * n2;
        if (d < 200) mean += r;
    }
    mean *= 1.0 / 200;
    energy /= draws;
    double ratio = energy / atom_energy(f, K);
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
    CHECK(lp_norm(mean, 2) < 3.0 * std::sqrt(energy / 200));
}

TEST_CASE("Khinchin tables") {
    std::vector<double> ps{1, 2, 4, 8};
    auto single = verify_khinchin(Family::rademacher, {1, 0, 0}, ps, 2000, 1);
    for (const auto& r : single.rows) CHECK(std::abs(r.empirical - 1.0) < 1e-12);

    // exhaustive enumeration of the four sign patterns of (1,1)
    double enum2 = 0;
    for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) enum2 += std::pow(s1 + s2, 2) / 4.0;
    auto pair = verify_khinchin(Family::rademacher, {1, 1}, {2}, 100000, 2);
    CHECK(std::abs(pair.rows[0].empirical - std::sqrt(enum2)) < 0.01 * std::sqrt(enum2));
    CHECK(std::abs(std::sqrt(enum2) - std::sqrt(2.0)) < 1e-15);

    std::vector<double> a{0.3, -1.2, 0.5, 2.0, 0.7};
    double a2 = 0;
    for (double x : a) a2 += x * x;
    auto gauss = verify_khinchin(Family::gaussian, a, ps, 100000, 3);
    for (const auto& r : gauss.rows)
        CHECK(std::abs(r.empirical / std::sqrt(a2) / gaussian_abs_moment(r.p) - 1) < 0.05);
    CHECK(std::abs(gaussian_abs_moment(2) - 1.0) < 1e-14);
    CHECK(std::abs(gaussian_abs_moment(1) - std::sqrt(2 / kPi)) < 1e-14);
    CHECK_THROWS_AS(verify_khinchin(Family::gaussian, {0, 0}, ps, 10, 1), Error);
    CHECK_THROWS_AS(verify_khinchin(Family::gaussian, a, {32}, 10, 1), Error);
}

TEST_CASE("maximal inequality") {
    auto one = verify_max_inequality(Family::rademacher, {1}, 100, 1);
    CHECK(one.rows[0].empirical == 1.0);

    CHECK(std::abs(gaussian_expected_abs_max(1) - std::sqrt(2 / kPi)) < 1e-10);
    auto gm = verify_max_inequality(Family::gaussian, {10, 100, 1000, 10000}, 1000, 2);
    CHECK(std::abs(gm.rows[3].empirical / gaussian_expected_abs_max(10000) - 1) < 0.01);
    CHECK(gm.spread < 5);
    for (std::size_t i = 1; i < gm.rows.size(); ++i) CHECK(gm.rows[i].empirical > gm.rows[i - 1].empirical);
}

TEST_CASE("tail statistics") {
    std::vector<double> rad(5000);
    for (std::size_t i = 0; i < rad.size(); ++i) rad[i] = (i % 2) ? 1.0 : -1.0;
    auto tr = tail_statistics(rad);
    CHECK(tr.psi <= 1.0 + 1e-15);

    std::mt19937_64 rng(77);
    std::normal_distribution<double> nd;
    std::vector<double> gs(100000);
    for (auto& x : gs) x = nd(rng);
    auto tg = tail_statistics(gs);
    CHECK(tg.c_hat >= 0.35);
    CHECK(tg.c_hat <= 0.65);

    auto tz = tail_statistics(std::vector<double>(2000, 0.0));
    CHECK(tz.psi == 0.0);
    CHECK_THROWS_AS(tail_statistics(std::vector<double>(10, 1.0)), Error);
}
