#include "kglab/randomization.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace kglab {

const char* family_name(Family f) {
    switch (f) {
    case Family::rademacher: return "rademacher";
    case Family::gaussian: return "gaussian";
    case Family::uniform_symmetric: return "uniform_symmetric";
    }
    return "unknown";
}

Family parse_family(const std::string& s) {
    if (s == "rademacher") return Family::rademacher;
    if (s == "gaussian") return Family::gaussian;
    if (s == "uniform_symmetric" || s == "uniform") return Family::uniform_symmetric;
    throw Error(ErrorCode::invalid_argument, "unknown family '" + s + "'");
}

double psi_norm_bound(Family f) {
    switch (f) {
    case Family::rademacher: return 1.0;
    case Family::gaussian: return std::sqrt(2.0 / kPi);
    case Family::uniform_symmetric: return std::sqrt(3.0) / 2.0;
    }
    return 1.0;
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t RandomSeedPlan::derive(char tag, const IVec& index) const {
    std::uint64_t h = mix64(base_seed ^ (static_cast<std::uint64_t>(static_cast<unsigned char>(tag)) << 56));
    h = mix64(h ^ static_cast<std::uint64_t>(index.size()));
    for (int c : index) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
    return h;
}

double draw_from_seed(Family f, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    switch (f) {
    case Family::rademacher: return (eng() >> 63) ? 1.0 : -1.0;
    case Family::gaussian: return std::normal_distribution<double>(0.0, 1.0)(eng);
    case Family::uniform_symmetric:
        return std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(eng);
    }
    return 0.0;
}

double RandomSeedPlan::draw(char tag, const IVec& index) const {
    if (force_unit) return 1.0;
    return draw_from_seed(family, derive(tag, index));
}

double RandomSeedPlan::draw_x(const IVec& k) const {
    IVec neg(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) neg[i] = -k[i];
    return draw('X', std::max(k, neg));
}

double RandomSeedPlan::draw_y(const IVec& l) const { return draw('Y', l); }

std::string RandomSeedPlan::to_json() const {
    nlohmann::json j;
    j["base_seed"] = base_seed;
    j["family"] = family_name(family);
    if (force_unit) j["force_unit"] = true;
    return j.dump();
}

RandomSeedPlan RandomSeedPlan::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    RandomSeedPlan p;
    p.base_seed = j.at("base_seed").get<std::uint64_t>();
    p.family = parse_family(j.at("family").get<std::string>());
    p.force_unit = j.value("force_unit", false);
    return p;
}

RealField spatial_randomizer(const TorusGrid& g, const RandomSeedPlan& plan) {
    RealField m(g);
    for (const auto& l : spatial_cells(g)) {
        double y = plan.draw_y(l);
        auto w = spatial_window_table(g, l);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += y * w[i];
    }
    return m;
}

std::vector<double> frequency_randomizer(const TorusGrid& g, const RandomSeedPlan& plan, int K) {
    std::vector<double> m(g.size(), 0.0);
    for (const auto& k : frequency_cells(g, K)) {
        double x = plan.draw_x(k);
        auto w = cell_multiplier(g, k);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += x * w[i];
    }
    return m;
}

namespace {

RealField apply_randomizers(const RealField& f, const RealField& my, const std::vector<double>& mx) {
    RealField fy = f;
    for (std::size_t i = 0; i < fy.size(); ++i) fy[i] *= my[i];
    auto s = forward_transform(fy);
    for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= mx[i];
    return inverse_real(s);
}

} // namespace

StatePair randomize_data(const RealField& f, const RealField& g, const RandomSeedPlan& plan, int K) {
    if (!(f.grid == g.grid)) throw Error(ErrorCode::invalid_argument, "f and g on different grids");
    auto my = spatial_randomizer(f.grid, plan);
    auto mx = frequency_randomizer(f.grid, plan, K);
    return StatePair(apply_randomizers(f, my, mx), apply_randomizers(g, my, mx));
}

RealField randomize_field(const RealField& f, const RandomSeedPlan& plan, int K) {
    return apply_randomizers(f, spatial_randomizer(f.grid, plan), frequency_randomizer(f.grid, plan, K));
}

double atom_energy(const RealField& f, int K) {
    const auto& g = f.grid;
    auto ks = frequency_cells(g, K);
    std::vector<std::vector<double>> mult;
    for (const auto& k : ks) mult.push_back(cell_multiplier(g, k));
    const double plancherel = std::pow(g.dxi() / (2.0 * kPi), g.d);
    double acc = 0;
    for (const auto& l : spatial_cells(g)) {
        auto s = forward_transform(spatial_window(f, l));
        for (const auto& m : mult)
            for (std::size_t i = 0; i < s.size(); ++i)
                if (m[i] != 0.0) acc += std::norm(s.c[i] * m[i]);
    }
    return acc * plancherel;
}

double gaussian_abs_moment(double p) {
    return std::sqrt(2.0) * std::pow(boost::math::tgamma((p + 1) / 2) / std::sqrt(kPi), 1.0 / p);
}

KhinchinTable verify_khinchin(Family f, const std::vector<double>& a, const std::vector<double>& ps, int draws,
                              std::uint64_t seed) {
    double a2 = 0;
    for (double x : a) a2 += x * x;
    if (a2 == 0) throw Error(ErrorCode::invalid_argument, "coefficient vector must be nonzero");
    if (draws < 1) throw Error(ErrorCode::invalid_argument, "draw count must be positive");
    for (double p : ps)
        if (p < 1 || p > 16) throw Error(ErrorCode::invalid_argument, "p grid must lie in [1,16]");
    a2 = std::sqrt(a2);

    RandomSeedPlan plan{seed, f, false};
    std::vector<double> moments(ps.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
        std::mt19937_64 eng(plan.derive('K', {d}));
        double s = 0;
        for (double x : a) {
            double v = 0;
            switch (f) {
            case Family::rademacher: v = (eng() >> 63) ? 1.0 : -1.0; break;
            case Family::gaussian: v = std::normal_distribution<double>(0.0, 1.0)(eng); break;
            case Family::uniform_symmetric:
                v = std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(eng);
                break;
            }
            s += x * v;
        }
        for (std::size_t i = 0; i < ps.size(); ++i) moments[i] += std::pow(std::abs(s), ps[i]);
    }
    KhinchinTable t;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        KhinchinRow r;
        r.p = ps[i];
        r.empirical = std::pow(moments[i] / draws, 1.0 / ps[i]);
        r.bound = std::sqrt(ps[i]) * a2;
        r.ratio = r.empirical / r.bound;
        t.c_hat = std::max(t.c_hat, r.ratio);
        t.rows.push_back(r);
    }
    return t;
}

MaxTable verify_max_inequality(Family f, const std::vector<int>& Js, int draws, std::uint64_t seed) {
    if (draws < 1) throw Error(ErrorCode::invalid_argument, "draw count must be positive");
    MaxTable t;
    double lo = kInf, hi = 0;
    for (int J : Js) {
        if (J < 1 || J > 100000) throw Error(ErrorCode::invalid_argument, "J must lie in [1, 1e5]");
        RandomSeedPlan plan{seed ^ mix64(static_cast<std::uint64_t>(J)), f, false};
        double acc = 0;
        for (int d = 0; d < draws; ++d) {
            std::mt19937_64 eng(plan.derive('M', {d}));
            double m = 0;
            switch (f) {
            case Family::rademacher: m = 1.0; eng(); break;
            case Family::gaussian: {
                std::normal_distribution<double> nd(0.0, 1.0);
                for (int j = 0; j < J; ++j) m = std::max(m, std::abs(nd(eng)));
                break;
            }
            case Family::uniform_symmetric: {
                std::uniform_real_distribution<double> ud(-std::sqrt(3.0), std::sqrt(3.0));
                for (int j = 0; j < J; ++j) m = std::max(m, std::abs(ud(eng)));
                break;
            }
            }
            acc += m;
        }
        MaxRow r;
        r.J = J;
        r.empirical = acc / draws;
        r.bound = std::log(std::sqrt(1.0 + double(J) * J));
        r.ratio = r.empirical / r.bound;
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
        t.rows.push_back(r);
    }
    t.spread = t.rows.empty() ? 0.0 : hi / lo;
    return t;
}

double gaussian_expected_abs_max(int J) {
    auto integrand = [J](double x) {
        double q = std::erfc(x / std::sqrt(2.0));
        return -std::expm1(J * std::log1p(-q));
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    return GK::integrate(integrand, 0.0, 5.0, 15, 1e-13) + GK::integrate(integrand, 5.0, 40.0, 15, 1e-13);
}

TailStats tail_statistics(const std::vector<double>& samples) {
    if (samples.size() < 1000) throw Error(ErrorCode::insufficient_points, "need at least 1000 samples");
    const double n = static_cast<double>(samples.size());
    std::vector<double> a(samples.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(samples[i]);
    std::sort(a.begin(), a.end());

    TailStats out{};
    out.psi = 0;
    for (double p : {1.0, 2.0, 4.0, 8.0}) {
        double s = 0;
        for (double x : a) s += std::pow(x, p);
        out.psi = std::max(out.psi, std::pow(s / n, 1.0 / p) / std::sqrt(p));
    }

    // Survival at each distinct value: fraction strictly above it.
    std::vector<double> x2, y;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i + 1 < a.size() && a[i + 1] == a[i]) continue;
        double surv = (n - static_cast<double>(i + 1)) / n;
        if (surv < 10.0 / n || surv > 0.5 || a[i] <= 0) continue;
        x2.push_back(a[i] * a[i]);
        y.push_back(-std::log(surv / 2.0));
    }
    out.tail_points = static_cast<int>(x2.size());
    if (x2.size() < 3) {
        out.c_hat = std::nan("");
        return out;
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x2.size(); ++i) {
        mx += x2[i];
        my += y[i];
    }
    mx /= x2.size();
    my /= x2.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x2.size(); ++i) {
        sxx += (x2[i] - mx) * (x2[i] - mx);
        sxy += (x2[i] - mx) * (y[i] - my);
    }
    out.c_hat = sxx > 0 ? sxy / sxx : std::nan("");
    return out;
}

} // namespace kglab
