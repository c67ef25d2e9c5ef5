#include "kglab/wavepackets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "kglab/propagator.hpp"

namespace kglab {

namespace {

double bracket(const IVec& k) {
    double s = 1;
    for (int x : k) s += double(x) * x;
    return std::sqrt(s);
}

std::vector<double> group_velocity(const IVec& k) {
    double b = bracket(k);
    std::vector<double> v(k.size());
    for (std::size_t a = 0; a < k.size(); ++a) v[a] = k[a] / b;
    return v;
}

void check_packet_band(const TorusGrid& g, const IVec& k) {
    if (static_cast<int>(k.size()) != g.d) throw Error(ErrorCode::invalid_argument, "k has the wrong dimension");
    int kmax = 0;
    for (int x : k) kmax = std::max(kmax, std::abs(x));
    g.require_band(kmax + 2.0);
}

void propagate(SpectralField& s, const std::vector<double>& omega, double t) {
    for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= std::polar(1.0, t * omega[i]);
}

std::vector<double> slice_times(double t0, double N, double step) {
    std::vector<double> ts;
    int m = std::max(1, static_cast<int>(std::ceil(N / step - 1e-12)));
    for (int j = 0; j <= m; ++j) ts.push_back(t0 + N * j / m);
    return ts;
}

} // namespace

SpectralField packet_source(const RealField& f, const RealField& g, const RandomSeedPlan& plan, const IVec& k,
                            double t0) {
    const auto& G = f.grid;
    if (!(g.grid == G)) throw Error(ErrorCode::invalid_argument, "f and g live on different grids");
    check_packet_band(G, k);
    auto Y = spatial_randomizer(G, plan);
    RealField yf = f, yg = g;
    for (std::size_t i = 0; i < yf.size(); ++i) {
        yf[i] *= Y[i];
        yg[i] *= Y[i];
    }
    auto sf = forward_transform(yf);
    auto sg = forward_transform(yg);
    auto cell = cell_multiplier(G, k);
    auto omega = bracket_symbol(G);
    SpectralField out(G);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (cell[i] == 0.0) continue;
        cplx v = 0.5 * cell[i] * (sf.c[i] - cplx(0, 1) / omega[i] * sg.c[i]);
        out.c[i] = v * std::polar(1.0, t0 * omega[i]);
    }
    return out;
}

namespace {

struct SparseWindow {
    std::vector<std::size_t> idx;
    std::vector<double> val;
};

// phi_l on the grid, stored on its support only.
SparseWindow sparse_window(const TorusGrid& g, const IVec& l) {
    std::vector<std::vector<std::pair<int, double>>> axes(g.d);
    for (int a = 0; a < g.d; ++a)
        for (int i = 0; i < g.n; ++i) {
            double y = g.coord(i) - l[a];
            y -= g.L * std::round(y / g.L);
            double v = phi_1d(y);
            if (v != 0.0) axes[a].push_back({i, v});
        }
    SparseWindow w;
    std::vector<std::size_t> pos(g.d, 0);
    for (const auto& ax : axes)
        if (ax.empty()) return w;
    while (true) {
        std::size_t flat = 0;
        double v = 1;
        for (int a = 0; a < g.d; ++a) {
            flat = flat * g.n + static_cast<std::size_t>(axes[a][pos[a]].first);
            v *= axes[a][pos[a]].second;
        }
        w.idx.push_back(flat);
        w.val.push_back(v);
        int a = g.d - 1;
        while (a >= 0 && pos[a] + 1 == axes[a].size()) pos[a--] = 0;
        if (a < 0) break;
        ++pos[a];
    }
    return w;
}

SpectralField packet_from_source(const ComplexField& source, const SparseWindow& w, const std::vector<double>& enlarged) {
    ComplexField x(source.grid);
    for (std::size_t i = 0; i < w.idx.size(); ++i) x[w.idx[i]] = source[w.idx[i]] * w.val[i];
    auto s = forward_transform(x);
    for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= enlarged[i];
    return s;
}

} // namespace

SpectralField wave_packet_field(const ComplexField& source, const IVec& k, const IVec& l) {
    check_packet_band(source.grid, k);
    return packet_from_source(source, sparse_window(source.grid, l), cell_multiplier(source.grid, k, 1));
}

PacketSet build_wave_packets(const RealField& f, const RealField& g, const RandomSeedPlan& plan,
                             const std::vector<IVec>& ks, double t0, const PacketOptions& opt) {
    const auto& G = f.grid;
    for (const auto& k : ks) check_packet_band(G, k);
    auto cells = opt.cells.empty() ? spatial_cells(G) : opt.cells;
    std::vector<SparseWindow> windows;
    for (const auto& l : cells) windows.push_back(sparse_window(G, l));

    PacketSet ps;
    ps.grid = G;
    ps.t0 = t0;
    struct Pending {
        std::size_t kidx, lidx;
        double bound;
    };
    std::vector<ComplexField> sources;
    std::vector<Pending> todo;
    double max_bound = 0;
    for (std::size_t a = 0; a < ks.size(); ++a) {
        sources.push_back(inverse_transform(packet_source(f, g, plan, ks[a], t0)));
        const auto& fk = sources.back();
        for (std::size_t b = 0; b < cells.size(); ++b) {
            double s = 0;
            const auto& w = windows[b];
            for (std::size_t i = 0; i < w.idx.size(); ++i) s += w.val[i] * w.val[i] * std::norm(fk[w.idx[i]]);
            double bound = std::sqrt(s * G.cell_volume());
            max_bound = std::max(max_bound, bound);
            todo.push_back({a, b, bound});
        }
    }
    std::vector<std::vector<double>> enlarged;
    for (const auto& k : ks) enlarged.push_back(cell_multiplier(G, k, 1));
    for (const auto& p : todo) {
        if (opt.rel_floor > 0 && p.bound < opt.rel_floor * max_bound) continue;
        auto s = packet_from_source(sources[p.kidx], windows[p.lidx], enlarged[p.kidx]);
        WavePacket wp;
        wp.k = ks[p.kidx];
        wp.l = cells[p.lidx];
        wp.t0 = t0;
        wp.norm = spectral_l2_norm(s);
        if (opt.keep_fields) wp.w = std::move(s);
        wp.velocity = group_velocity(wp.k);
        ps.packets.push_back(std::move(wp));
    }
    return ps;
}

std::vector<double> Tube::center(double t) const {
    std::vector<double> c(l.size());
    for (std::size_t a = 0; a < c.size(); ++a) c[a] = l[a] - (t - t0) * velocity[a];
    return c;
}

bool Tube::contains(double t, const double* x) const {
    if (t < t0 || t > t0 + N) return false;
    double r2 = 0;
    for (std::size_t a = 0; a < l.size(); ++a) {
        double y = x[a] - (l[a] - (t - t0) * velocity[a]);
        r2 += y * y;
    }
    return r2 <= radius * radius;
}

Tube make_tube(const IVec& k, const IVec& l, double t0, double N, double delta) {
    if (k.size() != l.size()) throw Error(ErrorCode::invalid_argument, "k and l differ in dimension");
    if (!(N > 0)) throw Error(ErrorCode::invalid_argument, "N must be positive");
    Tube T;
    T.k = k;
    T.l = l;
    T.t0 = t0;
    T.N = N;
    T.radius = std::pow(N, 2 * delta);
    T.velocity = group_velocity(k);
    return T;
}

bool tube_meets_cube(const Tube& T, const std::vector<double>& centre, double side) {
    const std::size_t d = T.l.size();
    if (centre.size() != d + 1) throw Error(ErrorCode::invalid_argument, "cube centre must have d + 1 entries");
    double a = std::max(T.t0, centre[0] - side), b = std::min(T.t0 + T.N, centre[0] + side);
    if (a > b) return false;
    // squared distance from the axis point to the box is a piecewise quadratic in t with breakpoints
    // where a coordinate crosses a face
    std::vector<double> pts{a, b};
    for (std::size_t q = 0; q < d; ++q) {
        double v = T.velocity[q];
        if (v == 0.0) continue;
        for (double face : {centre[q + 1] - side, centre[q + 1] + side}) {
            double t = T.t0 + (T.l[q] - face) / v;
            if (t > a && t < b) pts.push_back(t);
        }
    }
    std::sort(pts.begin(), pts.end());
    double best = kInf;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double lo = pts[i], hi = pts[i + 1];
        double mid = 0.5 * (lo + hi);
        double A = 0, B = 0, C0 = 0;
        for (std::size_t q = 0; q < d; ++q) {
            // coordinate p(t) = l - (t - t0) v = alpha + beta t
            double beta = -T.velocity[q];
            double alpha = T.l[q] + T.t0 * T.velocity[q];
            double pm = alpha + beta * mid;
            double face;
            if (pm > centre[q + 1] + side)
                face = centre[q + 1] + side;
            else if (pm < centre[q + 1] - side)
                face = centre[q + 1] - side;
            else
                continue;
            double al = alpha - face;
            A += beta * beta;
            B += 2 * al * beta;
            C0 += al * al;
        }
        auto val = [&](double t) { return std::max(0.0, (A * t + B) * t + C0); };
        best = std::min({best, val(lo), val(hi)});
        if (A > 0) {
            double ts = -B / (2 * A);
            if (ts > lo && ts < hi) best = std::min(best, val(ts));
        }
    }
    if (pts.size() == 2 && a == b) {
        // degenerate interval: a single instant
        auto c = T.center(a);
        double r2 = 0;
        for (std::size_t q = 0; q < d; ++q) {
            double y = std::max(0.0, std::abs(c[q] - centre[q + 1]) - side);
            r2 += y * y;
        }
        best = r2;
    }
    return best <= T.radius * T.radius;
}

int dyadic_exponent(double norm) {
    if (!(norm > 0) || !std::isfinite(norm)) throw Error(ErrorCode::invalid_argument, "norm must be positive");
    int e;
    std::frexp(norm, &e);
    return e - 1;
}

std::vector<AmplitudeClass> bin_amplitudes(const PacketSet& ps, const std::vector<double>& x0, double N, double C) {
    if (C < 1) throw Error(ErrorCode::invalid_argument, "C must be at least 1");
    const int d = ps.grid.d;
    if (static_cast<int>(x0.size()) != d) throw Error(ErrorCode::invalid_argument, "x0 has the wrong dimension");
    std::map<int, AmplitudeClass> classes;
    for (std::size_t i = 0; i < ps.packets.size(); ++i) {
        const auto& p = ps.packets[i];
        if (!(p.norm > 0)) continue;
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += (p.l[a] - x0[a]) * (p.l[a] - x0[a]);
        if (r2 > C * C * N * N) continue;
        int m = dyadic_exponent(p.norm);
        auto& c = classes[m];
        c.m = m;
        c.members.push_back(i);
    }
    std::vector<AmplitudeClass> out;
    double scale = std::pow(N, (d - 6) / 4.0);
    for (auto& [m, c] : classes) {
        c.mu = std::max(1L, static_cast<long>(std::ceil(scale * double(c.members.size()) - 1e-12)));
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<int> CubeLattice::lo() const {
    std::vector<int> j(x0.size() + 1);
    j[0] = static_cast<int>(std::ceil(t0 / side - 0.5));
    for (std::size_t a = 0; a < x0.size(); ++a) j[a + 1] = static_cast<int>(std::ceil((x0[a] - extent) / side - 0.5));
    return j;
}

std::vector<int> CubeLattice::hi() const {
    std::vector<int> j(x0.size() + 1);
    j[0] = static_cast<int>(std::floor((t0 + N) / side + 0.5));
    for (std::size_t a = 0; a < x0.size(); ++a)
        j[a + 1] = static_cast<int>(std::floor((x0[a] + extent) / side + 0.5));
    return j;
}

std::vector<double> CubeLattice::centre(const std::vector<int>& j) const {
    std::vector<double> c(j.size());
    for (std::size_t a = 0; a < j.size(); ++a) c[a] = side * j[a];
    return c;
}

std::size_t CubeLattice::count() const {
    auto a = lo(), b = hi();
    std::size_t n = 1;
    for (std::size_t i = 0; i < a.size(); ++i) n *= static_cast<std::size_t>(std::max(0, b[i] - a[i] + 1));
    return n;
}

CubeLattice make_cube_lattice(double t0, double N, const std::vector<double>& x0, double delta, double C) {
    if (!(N > 0) || !(delta > 0)) throw Error(ErrorCode::invalid_argument, "N and delta must be positive");
    CubeLattice lat;
    lat.t0 = t0;
    lat.N = N;
    lat.x0 = x0;
    lat.side = std::pow(N, delta);
    lat.extent = C * N + N;
    return lat;
}

BushDecomposition greedy_bush_decomposition(const std::vector<Tube>& tubes, long mu, const CubeLattice& lat) {
    if (mu < 1) throw Error(ErrorCode::invalid_argument, "mu must be at least 1");
    const std::size_t d = lat.x0.size();
    const double s = lat.side;
    auto lo = lat.lo(), hi = lat.hi();

    // cube -> tubes meeting its double, only for cubes some tube can reach
    std::map<std::vector<int>, std::vector<std::size_t>> incidence;
    for (std::size_t i = 0; i < tubes.size(); ++i) {
        const auto& T = tubes[i];
        if (T.l.size() != d) throw Error(ErrorCode::invalid_argument, "tube dimension does not match the lattice");
        for (int jt = lo[0]; jt <= hi[0]; ++jt) {
            double a = std::max(T.t0, s * jt - s), b = std::min(T.t0 + T.N, s * jt + s);
            if (a > b) continue;
            auto ca = T.center(a), cb = T.center(b);
            std::vector<int> jlo(d), jhi(d);
            bool empty = false;
            for (std::size_t q = 0; q < d; ++q) {
                double xmin = std::min(ca[q], cb[q]) - T.radius, xmax = std::max(ca[q], cb[q]) + T.radius;
                jlo[q] = std::max(lo[q + 1], static_cast<int>(std::ceil((xmin - s) / s)));
                jhi[q] = std::min(hi[q + 1], static_cast<int>(std::floor((xmax + s) / s)));
                if (jlo[q] > jhi[q]) empty = true;
            }
            if (empty) continue;
            std::vector<int> j(d + 1);
            j[0] = jt;
            std::vector<int> cur = jlo;
            while (true) {
                for (std::size_t q = 0; q < d; ++q) j[q + 1] = cur[q];
                if (tube_meets_cube(T, lat.centre(j), s)) incidence[j].push_back(i);
                std::size_t q = d;
                while (q > 0 && cur[q - 1] == jhi[q - 1]) {
                    cur[q - 1] = jlo[q - 1];
                    --q;
                }
                if (q == 0) break;
                ++cur[q - 1];
            }
        }
    }

    BushDecomposition out;
    out.mu = mu;
    std::vector<char> taken(tubes.size(), 0);
    // counts only fall, so a cube passed over never qualifies later and one ordered sweep suffices
    for (const auto& [cube, members] : incidence) {
        long cnt = 0;
        for (std::size_t i : members) cnt += !taken[i];
        if (cnt < mu) continue;
        Bush b;
        b.anchor = cube;
        for (std::size_t i : members)
            if (!taken[i]) {
                taken[i] = 1;
                b.members.push_back(i);
            }
        out.bushes.push_back(std::move(b));
    }
    for (std::size_t i = 0; i < tubes.size(); ++i)
        if (!taken[i]) out.remainder.push_back(i);
    return out;
}

namespace {

// Independent incidence test: ternary search of the convex distance from the axis to the box.
bool meets_by_search(const Tube& T, const std::vector<double>& c, double s) {
    double a = std::max(T.t0, c[0] - s), b = std::min(T.t0 + T.N, c[0] + s);
    if (a > b) return false;
    auto dist2 = [&](double t) {
        double r2 = 0;
        for (std::size_t q = 0; q < T.l.size(); ++q) {
            double x = T.l[q] - (t - T.t0) * T.velocity[q];
            double y = std::max(0.0, std::abs(x - c[q + 1]) - s);
            r2 += y * y;
        }
        return r2;
    };
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (dist2(m1) <= dist2(m2))
            b = m2;
        else
            a = m1;
    }
    return dist2(0.5 * (a + b)) <= T.radius * T.radius * (1 + 1e-12);
}

} // namespace

BushAudit verify_bush_decomposition(const std::vector<Tube>& tubes, const BushDecomposition& dec,
                                    const CubeLattice& lat) {
    BushAudit au;
    std::vector<int> seen(tubes.size(), 0);
    bool range_ok = true;
    auto mark = [&](std::size_t i) {
        if (i >= tubes.size())
            range_ok = false;
        else
            ++seen[i];
    };
    for (const auto& b : dec.bushes)
        for (std::size_t i : b.members) mark(i);
    for (std::size_t i : dec.remainder) mark(i);
    au.partition = range_ok && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });

    au.sizes = true;
    au.anchors = true;
    for (const auto& b : dec.bushes) {
        if (static_cast<long>(b.members.size()) < dec.mu) au.sizes = false;
        auto c = lat.centre(b.anchor);
        for (std::size_t i : b.members)
            if (i >= tubes.size() || !meets_by_search(tubes[i], c, lat.side)) au.anchors = false;
    }

    // bounding boxes of the remainder tubes for a cheap rejection
    const std::size_t d = lat.x0.size();
    struct Box {
        std::vector<double> lo, hi;
    };
    std::vector<Box> boxes;
    std::vector<const Tube*> rem;
    for (std::size_t i : dec.remainder) {
        if (i >= tubes.size()) continue;
        const auto& T = tubes[i];
        auto a = T.center(T.t0), b = T.center(T.t0 + T.N);
        Box bx{std::vector<double>(d + 1), std::vector<double>(d + 1)};
        bx.lo[0] = T.t0;
        bx.hi[0] = T.t0 + T.N;
        for (std::size_t q = 0; q < d; ++q) {
            bx.lo[q + 1] = std::min(a[q], b[q]) - T.radius;
            bx.hi[q + 1] = std::max(a[q], b[q]) + T.radius;
        }
        boxes.push_back(bx);
        rem.push_back(&T);
    }

    au.remainder = true;
    auto lo = lat.lo(), hi = lat.hi();
    std::vector<int> j = lo;
    bool any = true;
    for (std::size_t q = 0; q < lo.size(); ++q)
        if (lo[q] > hi[q]) any = false;
    while (any) {
        ++au.cubes_checked;
        auto c = lat.centre(j);
        long cnt = 0;
        for (std::size_t r = 0; r < rem.size(); ++r) {
            bool overlap = true;
            for (std::size_t q = 0; q <= d && overlap; ++q)
                overlap = boxes[r].lo[q] <= c[q] + lat.side && boxes[r].hi[q] >= c[q] - lat.side;
            if (overlap && meets_by_search(*rem[r], c, lat.side)) ++cnt;
        }
        au.max_remainder_count = std::max(au.max_remainder_count, cnt);
        if (cnt >= dec.mu) au.remainder = false;
        std::size_t q = j.size();
        while (q > 0 && j[q - 1] == hi[q - 1]) {
            j[q - 1] = lo[q - 1];
            --q;
        }
        if (q == 0) break;
        ++j[q - 1];
    }
    return au;
}

OffcoreResult measure_offcore_decay(const RealField& f, const IVec& k, const std::vector<double>& separations,
                                    const Cone& cone, double window_scale, double time_step) {
    const auto& g = f.grid;
    check_packet_band(g, k);
    if (static_cast<int>(cone.x0.size()) != g.d) throw Error(ErrorCode::invalid_argument, "cone dimension");
    if (!(window_scale > 0) || !(time_step > 0)) throw Error(ErrorCode::invalid_argument, "scales must be positive");
    auto fk = forward_transform(f);
    auto cell = cell_multiplier(g, k);
    for (std::size_t i = 0; i < fk.size(); ++i) fk.c[i] *= cell[i];
    double fk_norm = spectral_l2_norm(fk);
    if (!(fk_norm > 0)) throw Error(ErrorCode::invalid_argument, "f has no content in the cell");
    auto fk_x = inverse_transform(fk);
    auto enlarged = cell_multiplier(g, k, 1);
    auto omega = bracket_symbol(g);
    auto ts = slice_times(cone.t0, cone.N, time_step);
    std::vector<std::vector<char>> masks;
    for (double t : ts) masks.push_back(cone_slice(cone, g, t));

    OffcoreResult out;
    std::vector<int> idx(g.d);
    for (double sep : separations) {
        if (!(sep >= 0)) throw Error(ErrorCode::invalid_argument, "separations must be nonnegative");
        // window reach + travel + cone base, against the half extent
        double reach = sep - 0.75 * window_scale * std::sqrt(double(g.d)) - cone.N - cone.base_factor() * cone.N;
        if (sep + 0.75 * window_scale + cone.N > 0.5 * g.L || reach < 0)
            out.flags.push_back("wraparound or in-core risk at separation " + std::to_string(sep));
        std::vector<double> centre = cone.x0;
        centre[0] += sep;
        ComplexField x = fk_x;
        for (std::size_t f2 = 0; f2 < x.size(); ++f2) {
            g.unravel(f2, idx.data());
            double w = 1;
            for (int a = 0; a < g.d; ++a) {
                double y = g.coord(idx[a]) - centre[a];
                y -= g.L * std::round(y / g.L);
                w *= phi_1d(y / window_scale);
            }
            x[f2] *= w;
        }
        auto s = forward_transform(x);
        for (std::size_t i = 0; i < s.size(); ++i) s.c[i] *= enlarged[i];
        double sup = 0;
        for (std::size_t j = 0; j < ts.size(); ++j) {
            SpectralField st = s;
            propagate(st, omega, ts[j] - cone.t0);
            auto u = inverse_transform(st);
            for (std::size_t i = 0; i < u.size(); ++i)
                if (masks[j][i]) sup = std::max(sup, std::abs(u[i]));
        }
        out.rows.push_back({sep, sup / fk_norm});
    }
    std::vector<double> xs, ys;
    for (const auto& r : out.rows)
        if (r.separation > 0) {
            xs.push_back(r.separation);
            ys.push_back(r.amplitude);
        }
    out.fit = try_loglog_fit(xs, ys, 0, kInf);
    return out;
}

double critical_dimension(double p) {
    if (!(p > 1)) throw Error(ErrorCode::invalid_argument, "p must exceed 1");
    return 2 * (p + 1) / (p - 1);
}

TrilinearResult trilinear_cone_integral(const std::vector<RealField>& F, const Trajectory& u1, const Trajectory& u2,
                                        const Cone& cone, double s, double delta) {
    if (u1.t.size() != u2.t.size() || F.size() != u1.t.size())
        throw Error(ErrorCode::invalid_argument, "F, u1 and u2 must share the time grid");
    for (std::size_t j = 0; j < u1.t.size(); ++j)
        if (std::abs(u1.t[j] - u2.t[j]) > 1e-9) throw Error(ErrorCode::invalid_argument, "time grids differ");
    const double p = u2.model.p;
    TrilinearResult r;
    r.d_f = critical_dimension(p);
    const auto& g = u1.states.at(0).grid();
    const double vol = g.cell_volume();
    const double q = p + 1;

    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < u1.t.size(); ++j)
        if (u1.t[j] >= cone.t0 - 1e-9 && u1.t[j] <= cone.t0 + cone.N + 1e-9) idx.push_back(j);
    if (idx.empty() || std::abs(u1.t[idx.front()] - cone.t0) > 1e-9 ||
        std::abs(u1.t[idx.back()] - cone.t0 - cone.N) > 1e-9)
        throw Error(ErrorCode::coverage_gap, "trajectories do not cover the cone");

    std::vector<double> val(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
        std::size_t j = idx[a];
        auto mask = cone_slice(cone, g, u1.t[j]);
        double acc = 0, n1 = 0, n2 = 0, nq = 0;
        const auto& x1 = u1.states[j].u;
        const auto& x2 = u2.states[j].u;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            double a2 = std::abs(x2[i]);
            acc += std::abs(F[j][i]) * std::abs(x1[i]) * std::pow(a2, p - 1);
            n1 += x1[i] * x1[i];
            n2 += a2 * a2;
            nq += std::pow(a2, q);
        }
        val[a] = acc * vol;
        r.u1_l2 = std::max(r.u1_l2, std::sqrt(n1 * vol));
        r.u2_l2 = std::max(r.u2_l2, std::sqrt(n2 * vol));
        r.u2_lq = std::max(r.u2_lq, std::pow(nq * vol, 1.0 / q));
    }
    for (std::size_t a = 0; a + 1 < idx.size(); ++a)
        r.integral += 0.5 * (u1.t[idx[a + 1]] - u1.t[idx[a]]) * (val[a] + val[a + 1]);
    r.force = local_force(u2, cone, 0.5 * delta);

    const double df = r.d_f;
    double tail = std::pow(r.u2_lq, df * (6 - df) / (2 * (df - 2))) + std::pow(r.force, (6 - df) / 4);
    r.bound = std::pow(cone.N, -s + (df + 2) / 8 + 2 * df * delta) * r.u1_l2 * std::pow(r.u2_l2, (df - 4) / 2) * tail;
    r.c_hat = r.integral == 0 ? 0.0 : (r.bound > 0 ? r.integral / r.bound : kInf);
    return r;
}

double psi_estimate(const std::vector<double>& samples) {
    if (samples.empty()) throw Error(ErrorCode::insufficient_points, "no samples");
    double best = 0;
    for (double p : {1.0, 2.0, 4.0, 8.0}) {
        double s = 0;
        for (double x : samples) s += std::pow(std::abs(x), p);
        best = std::max(best, std::pow(s / samples.size(), 1.0 / p) / std::sqrt(p));
    }
    return best;
}

namespace {

int grid_points_for(int N, double L) {
    int n = 16;
    while (!(N + 2.0 < kPi * n / L)) n *= 2;
    return n;
}

std::vector<IVec> shell_directions(int d, int N) {
    std::vector<IVec> ks;
    IVec e(d, -1);
    while (true) {
        bool zero = std::all_of(e.begin(), e.end(), [](int x) { return x == 0; });
        if (!zero) {
            IVec k(d);
            for (int a = 0; a < d; ++a) k[a] = N * e[a];
            ks.push_back(k);
        }
        int a = d - 1;
        while (a >= 0 && e[a] == 1) e[a--] = -1;
        if (a < 0) break;
        ++e[a];
    }
    return ks;
}

// Band-limited noise under a sum of Gaussian envelopes around random centres.
RealField localized_data(const TorusGrid& g, int N, int bumps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    RealField noise(g);
    for (auto& x : noise.v) x = nd(rng);
    auto s = forward_transform(noise);
    double cut = 1.5 * N;
    apply_real_multiplier(s, [&](const double* xi) {
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += xi[a] * xi[a];
        return r2 <= cut * cut ? 1.0 : 0.0;
    });
    auto band = inverse_real(s);
    std::uniform_real_distribution<double> ud(-std::min(double(N), g.L / 4), std::min(double(N), g.L / 4));
    std::vector<std::vector<double>> centres(bumps, std::vector<double>(g.d));
    for (auto& c : centres)
        for (auto& x : c) x = ud(rng);
    auto env = sample(g, [&](const double* x) {
        double v = 0;
        for (const auto& c : centres) {
            double r2 = 0;
            for (int a = 0; a < g.d; ++a) {
                double y = x[a] - c[a];
                y -= g.L * std::round(y / g.L);
                r2 += y * y;
            }
            v += std::exp(-r2 / (2 * 1.5 * 1.5));
        }
        return v;
    });
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = band[i] * env[i];
    f *= 1.0 / lp_norm(f, 2);
    return f;
}

} // namespace

BushMonteCarloResult montecarlo_bush_supnorm(const std::vector<int>& Ns, const BushMonteCarloOptions& opt) {
    if (opt.draws < 1) throw Error(ErrorCode::invalid_argument, "draws must be positive");
    const int d = 2;
    BushMonteCarloResult out;
    for (int N : Ns) {
        if (N < 1) throw Error(ErrorCode::invalid_argument, "N must be positive");
        TorusGrid g(d, grid_points_for(N, opt.L), opt.L);
        auto ks = shell_directions(d, N);
        auto f = localized_data(g, N, opt.bumps, mix64(opt.seed ^ (0x9e37ull * N)));
        RealField zero(g);
        RandomSeedPlan omega2{mix64(opt.seed + 17 * N), opt.family, false};
        PacketOptions popt;
        popt.rel_floor = opt.rel_floor;
        popt.keep_fields = false;
        auto ps = build_wave_packets(f, zero, omega2, ks, 0.0, popt);
        std::vector<double> x0(d, 0.0);
        auto classes = bin_amplitudes(ps, x0, N, opt.C);
        auto lat = make_cube_lattice(0.0, N, x0, opt.delta, opt.C);

        BushScaleRow row;
        row.N = N;
        row.packets = ps.packets.size();
        // the most energetic class that contains a bush
        const AmplitudeClass* best = nullptr;
        BushDecomposition best_dec;
        std::vector<Tube> best_tubes;
        for (auto c = classes.rbegin(); c != classes.rend() && !best; ++c) {
            std::vector<Tube> tubes;
            for (std::size_t i : c->members)
                tubes.push_back(make_tube(ps.packets[i].k, ps.packets[i].l, 0.0, N, opt.delta));
            auto dec = greedy_bush_decomposition(tubes, c->mu, lat);
            if (dec.bushes.empty()) continue;
            best = &*c;
            best_dec = std::move(dec);
            best_tubes = std::move(tubes);
        }
        if (!best) {
            out.flags.push_back("no bush at N=" + std::to_string(N));
            row.skipped = opt.draws;
            out.rows.push_back(row);
            continue;
        }
        // largest bush of the chosen class
        const Bush* bush = &best_dec.bushes.front();
        for (const auto& b : best_dec.bushes)
            if (b.members.size() > bush->members.size()) bush = &b;
        row.m = best->m;
        row.mu = best->mu;
        row.bush_size = bush->members.size();
        row.bush_count = best_dec.bushes.size();
        row.remainder_size = best_dec.remainder.size();
        row.audit = verify_bush_decomposition(best_tubes, best_dec, lat);
        if (!row.audit.ok()) out.flags.push_back("bush invariants violated at N=" + std::to_string(N));

        // per-k partial sums so each draw is a short linear combination
        std::map<IVec, ComplexField> sources;
        auto group = [&](const std::vector<std::size_t>& members) {
            std::map<IVec, SpectralField> by_k;
            for (std::size_t t : members) {
                const auto& wp = ps.packets[best->members[t]];
                auto src = sources.find(wp.k);
                if (src == sources.end())
                    src = sources.emplace(wp.k, inverse_transform(packet_source(f, zero, omega2, wp.k, 0.0))).first;
                auto w = wave_packet_field(src->second, wp.k, wp.l);
                auto it = by_k.find(wp.k);
                if (it == by_k.end())
                    by_k.emplace(wp.k, std::move(w));
                else
                    for (std::size_t i = 0; i < g.size(); ++i) it->second.c[i] += w.c[i];
            }
            return by_k;
        };
        auto bush_k = group(bush->members);
        auto rem_k = group(best_dec.remainder);

        Cone cone{0.0, x0, double(N), ConeKind::standard};
        auto ts = slice_times(0.0, N, opt.time_step);
        auto omega = bracket_symbol(g);
        std::vector<std::vector<char>> cone_masks, off_masks;
        std::vector<int> ix(d);
        for (double t : ts) {
            auto cm = cone_slice(cone, g, t);
            auto om = cm;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!om[i]) continue;
                g.unravel(i, ix.data());
                double x[2] = {g.coord(ix[0]), g.coord(ix[1])};
                for (std::size_t t2 : bush->members) {
                    const auto& T = best_tubes[t2];
                    auto c = T.center(t);
                    double y[2];
                    for (int a = 0; a < d; ++a) {
                        double z = x[a] - c[a];
                        y[a] = c[a] + z - g.L * std::round(z / g.L);
                    }
                    if (T.contains(t, y)) {
                        om[i] = 0;
                        break;
                    }
                }
            }
            cone_masks.push_back(std::move(cm));
            off_masks.push_back(std::move(om));
        }

        const double two_m = std::ldexp(1.0, best->m);
        for (int dr = 0; dr < opt.draws; ++dr) {
            RandomSeedPlan omega1{mix64(opt.seed * 1000003ull + 7919ull * N + dr), opt.family, opt.force_unit};
            auto combine = [&](const std::map<IVec, SpectralField>& parts) {
                SpectralField s(g);
                for (const auto& [k, w] : parts) {
                    double X = omega1.draw_x(k);
                    for (std::size_t i = 0; i < g.size(); ++i) s.c[i] += X * w.c[i];
                }
                return s;
            };
            auto sweep = [&](const SpectralField& s0, double* off) {
                double sup = 0;
                for (std::size_t j = 0; j < ts.size(); ++j) {
                    SpectralField s = s0;
                    propagate(s, omega, ts[j]);
                    auto u = inverse_transform(s);
                    for (std::size_t i = 0; i < u.size(); ++i) {
                        if (!cone_masks[j][i]) continue;
                        double a = std::abs(u[i]);
                        sup = std::max(sup, a);
                        if (off && off_masks[j][i]) *off = std::max(*off, a);
                    }
                }
                return sup;
            };
            double off = 0;
            double bs = sweep(combine(bush_k), &off);
            row.b.push_back(bs / (two_m * std::sqrt(double(row.bush_size))));
            row.offtube.push_back(off / (two_m * double(row.bush_size)));
            if (!rem_k.empty()) row.dstat.push_back(sweep(combine(rem_k), nullptr) / (two_m * std::sqrt(double(row.mu))));
        }
        row.decomposition = std::move(best_dec);
        row.psi_b = psi_estimate(row.b);
        row.psi_d = row.dstat.empty() ? 0.0 : psi_estimate(row.dstat);
        double sum = 0;
        for (double x : row.offtube) sum += x;
        row.offtube_mean = sum / row.offtube.size();
        if (row.b.size() >= 1000)
            row.tail_b = tail_statistics(row.b);
        else
            row.tail_b.c_hat = std::nan("");
        out.rows.push_back(std::move(row));
    }

    std::vector<double> xs, ps_, os;
    for (const auto& r : out.rows)
        if (r.skipped == 0) {
            xs.push_back(r.N);
            ps_.push_back(r.psi_b);
            os.push_back(r.offtube_mean);
        }
    for (std::size_t i = 0; i < xs.size(); ++i)
        out.c_fit = std::max(out.c_fit, ps_[i] / std::pow(xs[i], d * opt.delta));
    auto slope = [&](const std::vector<double>& y) {
        if (xs.size() < 2) return std::nan("");
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += std::log(xs[i]);
            my += std::log(y[i]);
        }
        mx /= xs.size();
        my /= xs.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
            sxy += (std::log(xs[i]) - mx) * (std::log(y[i]) - my);
        }
        return sxy / sxx;
    };
    out.growth_slope = slope(ps_);
    out.offtube_slope = slope(os);
    if (xs.size() < 2) out.flags.push_back("fewer than two scales with bushes");
    return out;
}

} // namespace kglab
