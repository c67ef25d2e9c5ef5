#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "kglab/grid.hpp"

using namespace kglab;

namespace {

RealField random_field(const TorusGrid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    RealField f(g);
    for (auto& x : f.v) x = nd(rng);
    return f;
}

std::size_t flat_index(const TorusGrid& g, std::vector<int> idx) {
    std::size_t s = 0;
    for (int a = 0; a < g.d; ++a) s = s * g.n + static_cast<std::size_t>((idx[a] + g.n) % g.n);
    return s;
}

} // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(TorusGrid(2, 48, 32.0), Error);
    CHECK_THROWS_AS(TorusGrid(1, 64, 10.0), Error);
    CHECK_THROWS_AS(TorusGrid(0, 64, 32.0), Error);
    TorusGrid g(2, 64, 32.0);
    CHECK(g.size() == 4096);
    CHECK(g.dxi() <= 0.25);
    CHECK_THROWS_AS(g.require_band(20.0), Error);
    CHECK_NOTHROW(g.require_band(5.0));
}

TEST_CASE("constant field has only the DC coefficient") {
    TorusGrid g(2, 32, 32.0);
    RealField f(g);
    for (auto& x : f.v) x = 1.0;
    auto s = forward_transform(f);
    CHECK(std::abs(s.c[0] - cplx(std::pow(g.L, 2), 0)) < 1e-9);
    double rest = 0;
    for (std::size_t i = 1; i < s.size(); ++i) rest = std::max(rest, std::abs(s.c[i]));
    CHECK(rest < 1e-9);
}

TEST_CASE("cosine splits equally between +/- xi0") {
    TorusGrid g(1, 64, 32.0);
    const int m = 5;
    double xi0 = m * g.dxi();
    auto f = sample(g, [&](const double* x) { return std::cos(xi0 * x[0]); });
    auto s = forward_transform(f);
    CHECK(std::abs(std::abs(s.c[m]) - g.L / 2) < 1e-10);
    CHECK(std::abs(std::abs(s.c[g.n - m]) - g.L / 2) < 1e-10);
    CHECK(std::abs(s.c[m] - s.c[g.n - m]) < 1e-10);
}

TEST_CASE("round trip is identity") {
    std::mt19937_64 rng(7);
    for (int d = 1; d <= 3; ++d) {
        TorusGrid g(d, 32, 32.0);
        auto f = random_field(g, rng);
        auto back = inverse_real(forward_transform(f));
        double err = 0, mx = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            err = std::max(err, std::abs(back[i] - f[i]));
            mx = std::max(mx, std::abs(f[i]));
        }
        CHECK(err < 1e-10 * mx);
    }
}

TEST_CASE("real fields have Hermitian spectra") {
    std::mt19937_64 rng(11);
    TorusGrid g(2, 32, 32.0);
    auto s = forward_transform(random_field(g, rng));
    double scale = 0, err = 0;
    for (std::size_t i = 0; i < s.size(); ++i) scale = std::max(scale, std::abs(s.c[i]));
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            auto a = s.c[flat_index(g, {i, j})];
            auto b = s.c[flat_index(g, {-i, -j})];
            err = std::max(err, std::abs(a - std::conj(b)));
        }
    CHECK(err < 1e-12 * scale);
}

TEST_CASE("Sobolev norm of a single complex mode") {
    TorusGrid g(2, 32, 32.0);
    const int m1 = 3, m2 = -2;
    double xi[2] = {m1 * g.dxi(), m2 * g.dxi()};
    ComplexField f(g);
    std::vector<int> idx(2);
    for (std::size_t i = 0; i < f.size(); ++i) {
        g.unravel(i, idx.data());
        f[i] = std::exp(cplx(0, xi[0] * g.coord(idx[0]) + xi[1] * g.coord(idx[1])));
    }
    auto s = forward_transform(f);
    for (double sv : {0.0, 0.5, 1.0, 2.0}) {
        double expect = std::pow(1 + xi[0] * xi[0] + xi[1] * xi[1], sv / 2) * std::pow(g.L, g.d / 2.0);
        CHECK(std::abs(sobolev_norm(s, sv) - expect) < 1e-10 * expect);
    }
}

TEST_CASE("Sobolev norm basics") {
    TorusGrid g(2, 32, 32.0);
    CHECK(sobolev_norm(RealField(g), 1.0) == 0.0);
    std::mt19937_64 rng(3);
    auto f = random_field(g, rng);
    double direct = 0;
    for (double x : f.v) direct += x * x;
    direct = std::sqrt(direct * g.cell_volume());
    CHECK(std::abs(sobolev_norm(f, 0.0) - direct) < 1e-10 * direct);
    CHECK(std::abs(lp_norm(f, 2) - direct) < 1e-12 * direct);
    double prev = sobolev_norm(f, -1.0);
    for (double sv : {-0.5, 0.0, 0.5, 1.0, 1.5}) {
        double cur = sobolev_norm(f, sv);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("Parseval over 100 random fields") {
    std::mt19937_64 rng(5);
    TorusGrid g(2, 16, 32.0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto f = random_field(g, rng);
        double phys = lp_norm(f, 2);
        double spec = spectral_l2_norm(forward_transform(f));
        worst = std::max(worst, std::abs(phys * phys - spec * spec) / (phys * phys));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("mixed norm") {
    TorusGrid g(1, 32, 32.0);
    std::mt19937_64 rng(9);
    auto f = random_field(g, rng);
    std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<RealField> zero(t.size(), RealField(g));
    CHECK(mixed_norm(t, zero, 2, 2, 0, 1) == 0.0);

    std::vector<RealField> same(t.size(), f);
    double l4 = lp_norm(f, 4);
    CHECK(std::abs(mixed_norm(t, same, kInf, 4, 0, 1) - l4) < 1e-14 * l4);
    CHECK(std::abs(mixed_norm(t, same, 2, 4, 0, 1) - l4) < 1e-12 * l4);

    std::vector<RealField> scaled = same;
    for (auto& s : scaled) s *= -3.0;
    CHECK(std::abs(mixed_norm(t, scaled, 3, 6, 0, 1) - 3 * mixed_norm(t, same, 3, 6, 0, 1)) < 1e-12);

    CHECK_THROWS_AS(mixed_norm(t, same, 2, 2, 0.5, 0.5), Error);
    CHECK_THROWS_AS(mixed_norm(t, same, 2, 2, 0.0, 2.0), Error);

    // profile t on [0,1] sampled finely: int_0^1 t^2 dt = 1/3 up to trapezoid error
    std::vector<double> ts, vals;
    for (int i = 0; i <= 1000; ++i) {
        ts.push_back(i / 1000.0);
        vals.push_back(i / 1000.0);
    }
    CHECK(std::abs(mixed_norm_profile(ts, vals, 2, 0, 1) - std::sqrt(1.0 / 3)) < 1e-6);
    // window ends between samples are interpolated
    CHECK(std::abs(mixed_norm_profile(ts, vals, 1, 0.1005, 0.2005) - 0.01505) < 1e-12);
}

TEST_CASE("binary field round trip") {
    TorusGrid g(2, 16, 32.0);
    std::mt19937_64 rng(13);
    auto f = random_field(g, rng);
    std::string path = "test_grid_field.bin";
    write_field(path, f);
    {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        CHECK(static_cast<std::size_t>(in.tellg()) == 24 + 8 * g.size());
    }
    auto h = read_field(path);
    CHECK(h.grid == g);
    CHECK(h.v == f.v);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_field("does_not_exist.bin"), Error);
}
