#include "kglab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "kglab/cones.hpp"
#include "kglab/propagator.hpp"
#include "kglab/rational.hpp"
#include "kglab/wavepackets.hpp"

#ifndef KGLAB_VERSION
#define KGLAB_VERSION "0.0.0"
#endif

namespace kglab {

const char* kglab_version() { return KGLAB_VERSION; }

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& what, const std::string& v) {
    throw Error(ErrorCode::invalid_argument, key + ": expected " + what + ", got '" + v + "'");
}

} // namespace

double parse_real(const std::string& raw) {
    auto s = lower(trim(raw));
    if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
    if (s == "-inf" || s == "-infinity") return -kInf;
    if (s == "nan") return std::nan("");
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size()) throw Error(ErrorCode::invalid_argument, "not a number: '" + raw + "'");
    return x;
}

long parse_integer(const std::string& raw) {
    auto s = trim(raw);
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size()) throw Error(ErrorCode::invalid_argument, "not an integer: '" + raw + "'");
    return x;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ';') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
    return out;
}

// ---- Config ---------------------------------------------------------------

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::invalid_argument, where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw Error(ErrorCode::invalid_argument, where + "empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::invalid_argument, where + "expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw Error(ErrorCode::invalid_argument, where + "empty key");
        auto full = section.empty() ? key : section + "." + key;
        if (c.has(full)) throw Error(ErrorCode::invalid_argument, where + "duplicate key " + full);
        c.kv_[full] = value;
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::text(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
}

double Config::real(const std::string& key, double def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        return parse_real(it->second);
    } catch (const Error&) {
        bad_value(key, "a real number", it->second);
    }
}

long Config::integer(const std::string& key, long def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        return parse_integer(it->second);
    } catch (const Error&) {
        bad_value(key, "an integer", it->second);
    }
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    auto s = trim(it->second);
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
        if (!s.empty() && s.front() != '-') x = std::stoull(s, &pos, 0);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size()) bad_value(key, "an unsigned 64-bit integer", it->second);
    return x;
}

bool Config::flag(const std::string& key, bool def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    auto s = lower(trim(it->second));
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    bad_value(key, "true or false", it->second);
}

std::vector<double> Config::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(text(key))) {
        try {
            out.push_back(parse_real(item));
        } catch (const Error&) {
            bad_value(key, "a list of reals", text(key));
        }
    }
    return out;
}

std::vector<int> Config::integers(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_list(text(key))) {
        try {
            out.push_back(static_cast<int>(parse_integer(item)));
        } catch (const Error&) {
            bad_value(key, "a list of integers", text(key));
        }
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) out += k + " = " + v + "\n";
    return out;
}

// ---- kinds and parameters -------------------------------------------------

namespace {

struct KindName {
    ExperimentKind kind;
    const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::decay, "decay"},         {ExperimentKind::strichartz, "strichartz"},
    {ExperimentKind::khinchin, "khinchin"},   {ExperimentKind::maxineq, "maxineq"},
    {ExperimentKind::randomize, "randomize"}, {ExperimentKind::solve, "solve"},
    {ExperimentKind::cone_audit, "cone-audit"}, {ExperimentKind::bush, "bush"},
    {ExperimentKind::thresholds, "thresholds"}, {ExperimentKind::trilinear, "trilinear"},
};

using P = ParamType;

void add_grid(std::vector<ParamSpec>& t, int d, int n, double L) {
    t.push_back({"grid.d", P::integer, std::to_string(d), "spatial dimension"});
    t.push_back({"grid.n", P::integer, std::to_string(n), "points per axis (power of two)"});
    t.push_back({"grid.L", P::real, format_real(L), "torus side length"});
}

void add_model(std::vector<ParamSpec>& t) {
    t.push_back({"model.p", P::real, "3", "power of the defocusing nonlinearity |u|^{p-1}u; 1 is the free equation"});
}

} // namespace

const char* kind_name(ExperimentKind k) {
    for (const auto& e : kKinds)
        if (e.kind == k) return e.name;
    return "?";
}

ExperimentKind parse_kind(const std::string& s) {
    for (const auto& e : kKinds)
        if (s == e.name) return e.kind;
    throw Error(ErrorCode::invalid_argument, "unknown experiment kind '" + s + "'");
}

std::vector<ExperimentKind> all_kinds() {
    std::vector<ExperimentKind> out;
    for (const auto& e : kKinds) out.push_back(e.kind);
    return out;
}

std::vector<ParamSpec> parameter_table(ExperimentKind k) {
    std::vector<ParamSpec> t;
    t.push_back({"experiment.kind", P::text, kind_name(k), "must match the subcommand"});
    t.push_back({"experiment.seed", P::u64, "1", "base seed; every random draw derives from it"});
    t.push_back({"experiment.threads", P::integer, "1", "worker threads for independent shards"});
    switch (k) {
    case ExperimentKind::decay:
        add_grid(t, 2, 1024, 1024);
        t.push_back({"decay.k", P::integers, "8,0", "frequency cell, one entry per dimension"});
        t.push_back({"decay.r", P::real, "inf", "Lebesgue exponent of the measured norm (>= 2)"});
        t.push_back({"decay.t_min", P::real, "1", "first sample time"});
        t.push_back({"decay.t_max", P::real, "3290", "last sample time"});
        t.push_back({"decay.samples", P::integer, "40", "geometrically spaced sample times"});
        t.push_back({"decay.fit", P::text, "wave", "window used for the verdict: wave, kg or custom"});
        t.push_back({"decay.fit_lo", P::real, "0", "custom window start"});
        t.push_back({"decay.fit_hi", P::real, "0", "custom window end"});
        t.push_back({"decay.band_lo", P::real, "nan", "accepted slope range start; nan means predicted - tolerance"});
        t.push_back({"decay.band_hi", P::real, "nan", "accepted slope range end; nan means predicted + tolerance"});
        t.push_back({"decay.tolerance", P::real, "0.15", "half width of the accepted slope range"});
        t.push_back({"decay.width", P::real, "0.5", "Gaussian probe width"});
        t.push_back({"decay.tail_tol", P::real, "1e-4", "energy fraction ignored by the wrap check"});
        break;
    case ExperimentKind::strichartz:
        t.push_back({"strichartz.triples", P::text, "2:8:4, 3:4:inf, 2:4:4", "list of d:q:r triples"});
        t.push_back({"strichartz.ks", P::integers, "1,2,4,8", "cell offsets K, k = (K,0,..)"});
        t.push_back({"strichartz.horizon", P::real, "0", "horizon in units of 2pi<k> or 2pi<k>^3; 0 picks 5 or 4"});
        t.push_back({"strichartz.time_samples", P::integer, "120", "time samples per cell"});
        t.push_back({"strichartz.tail_tol", P::real, "1e-4", "energy fraction ignored when sizing the torus"});
        t.push_back({"strichartz.max_n", P::integer, "4096", "largest grid side"});
        t.push_back({"strichartz.tolerance", P::real, "0.1", "accepted |fitted - predicted| exponent"});
        break;
    case ExperimentKind::khinchin:
        t.push_back({"khinchin.families", P::text, "rademacher, gaussian, uniform_symmetric", "families"});
        t.push_back({"khinchin.sizes", P::integers, "10,1000", "coefficient vector lengths J"});
        t.push_back({"khinchin.ps", P::reals, "1,2,4,8", "moments p in [1,16]"});
        t.push_back({"khinchin.draws", P::integer, "20000", "Monte Carlo draws per table"});
        t.push_back({"khinchin.max_constant", P::real, "1", "largest accepted L^p / (sqrt(p) ||a||_2)"});
        break;
    case ExperimentKind::maxineq:
        t.push_back({"maxineq.family", P::text, "gaussian", "family"});
        t.push_back({"maxineq.sizes", P::integers, "10,100,1000,10000", "J values in [1, 1e5]"});
        t.push_back({"maxineq.draws", P::integer, "10000", "Monte Carlo draws per J"});
        t.push_back({"maxineq.max_spread", P::real, "5", "largest accepted max/min of E max / log<J>"});
        break;
    case ExperimentKind::randomize:
        add_grid(t, 1, 256, 32);
        t.push_back({"randomize.K", P::integer, "6", "frequency cells |k|_inf <= K"});
        t.push_back({"randomize.draws", P::integer, "500", "Monte Carlo draws"});
        t.push_back({"randomize.family", P::text, "gaussian", "family of X_k and Y_l"});
        t.push_back({"randomize.cut", P::real, "6", "band limit of the input data"});
        t.push_back({"randomize.ratio_lo", P::real, "0.9", "accepted E||f^w||^2 / atom energy, lower end"});
        t.push_back({"randomize.ratio_hi", P::real, "1.1", "accepted E||f^w||^2 / atom energy, upper end"});
        break;
    case ExperimentKind::solve:
        add_grid(t, 2, 256, 32);
        add_model(t);
        t.push_back({"solve.dt", P::real, "2e-3", "time step"});
        t.push_back({"solve.horizon", P::real, "10", "final time"});
        t.push_back({"solve.stride", P::integer, "50", "steps between energy records"});
        t.push_back({"solve.data", P::text, "noise", "noise (band-limited, fills the torus) or bump"});
        t.push_back({"solve.amplitude", P::real, "1", "sup of u(0)"});
        t.push_back({"solve.ut_amplitude", P::real, "0.5", "sup of u_t(0)"});
        t.push_back({"solve.cut", P::real, "3", "band limit of noise data"});
        t.push_back({"solve.bump_radius", P::real, "4", "support radius of bump data"});
        t.push_back({"solve.forcing_amplitude", P::real, "0", "A in F = A cos(w t) h(x); 0 disables forcing"});
        t.push_back({"solve.forcing_frequency", P::real, "2", "w in F"});
        t.push_back({"solve.tolerance", P::real, "1e-6", "accepted relative energy drift (unforced)"});
        t.push_back({"solve.snapshots", P::flag, "true", "write initial and final fields"});
        break;
    case ExperimentKind::cone_audit:
        add_grid(t, 2, 128, 64);
        add_model(t);
        t.push_back({"cone.Ns", P::integers, "2", "cone scales"});
        t.push_back({"cone.shifts", P::reals, "0,2", "x0 = (shift, 0, ..) for each cone of the family"});
        t.push_back({"cone.delta", P::real, "0.01", "shell thickness exponent"});
        t.push_back({"cone.dt", P::real, "0.01", "time step"});
        t.push_back({"cone.stride", P::integer, "5", "steps between stored slices"});
        t.push_back({"cone.amplitude", P::real, "1", "sup of v(0)"});
        t.push_back({"cone.ut_amplitude", P::real, "0.6", "sup of v_t(0)"});
        t.push_back({"cone.cut", P::real, "3", "band limit of the data"});
        t.push_back({"cone.forcing_amplitude", P::real, "0.2", "A in F = A cos(w t) h(x)"});
        t.push_back({"cone.forcing_frequency", P::real, "2", "w in F"});
        t.push_back({"cone.max_spread", P::real, "2", "largest accepted spread of the fitted constants"});
        break;
    case ExperimentKind::bush:
        t.push_back({"bush.Ns", P::integers, "4,8,16", "packet scales"});
        t.push_back({"bush.draws", P::integer, "500", "draws of omega_1 per scale"});
        t.push_back({"bush.delta", P::real, "0.01", "tube and cube exponent"});
        t.push_back({"bush.C", P::real, "4", "packets with |l - x0| <= C N are binned"});
        t.push_back({"bush.torus", P::real, "32", "torus side (d = 2)"});
        t.push_back({"bush.bumps", P::integer, "3", "Gaussian envelopes of the data"});
        t.push_back({"bush.time_step", P::real, "1", "spacing of the cone slices"});
        t.push_back({"bush.rel_floor", P::real, "1e-4", "packets below this fraction of the largest bound are not built"});
        t.push_back({"bush.family", P::text, "rademacher", "family of X_k and Y_l"});
        t.push_back({"bush.force_unit", P::flag, "false", "every draw +1 (test hook)"});
        t.push_back({"bush.growth_tolerance", P::real, "0.1", "accepted slope of psi_b above d delta"});
        t.push_back({"bush.offtube_slope_max", P::real, "-2", "largest accepted off-tube slope in N"});
        break;
    case ExperimentKind::thresholds:
        t.push_back({"thresholds.d", P::integer, "4", "dimension"});
        t.push_back({"thresholds.delta", P::text, "", "exact rational; empty for the optimized limit"});
        t.push_back({"thresholds.theta", P::text, "", "exact rational; empty for the optimized limit"});
        t.push_back({"thresholds.beta", P::text, "", "exact rational; empty for the optimized limit"});
        break;
    case ExperimentKind::trilinear:
        add_grid(t, 2, 128, 32);
        add_model(t);
        t.push_back({"trilinear.Ns", P::integers, "2,4", "cone scales; F is the dyadic free piece at N"});
        t.push_back({"trilinear.s", P::real, "1", "regularity in the bound N^{-s+...}"});
        t.push_back({"trilinear.delta", P::real, "0.01", "exponent delta"});
        t.push_back({"trilinear.dt", P::real, "0.05", "time step"});
        t.push_back({"trilinear.amplitude", P::real, "0.5", "sup of u(0)"});
        t.push_back({"trilinear.cut", P::real, "6", "band limit of the data"});
        break;
    }
    return t;
}

std::string default_config_text(ExperimentKind k) {
    std::string out = std::string("# kglab ") + kind_name(k) + " defaults\n";
    std::string section;
    for (const auto& p : parameter_table(k)) {
        auto dot = p.key.find('.');
        auto sec = p.key.substr(0, dot);
        if (sec != section) {
            out += "\n[" + sec + "]\n";
            section = sec;
        }
        out += "# " + p.doc + "\n" + p.key.substr(dot + 1) + " = " + p.def + "\n";
    }
    return out;
}

// ---- validation -----------------------------------------------------------

namespace {

struct Triple {
    int d;
    double q, r;
};

std::vector<Triple> parse_triples(const std::string& s) {
    std::vector<Triple> out;
    for (const auto& item : split_list(s)) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : item) {
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3) throw Error(ErrorCode::invalid_argument, "triple '" + item + "' is not d:q:r");
        out.push_back({static_cast<int>(parse_integer(parts[0])), parse_real(parts[1]), parse_real(parts[2])});
    }
    return out;
}

std::vector<Family> parse_families(const std::string& s) {
    std::vector<Family> out;
    for (const auto& f : split_list(s)) out.push_back(parse_family(f));
    return out;
}

bool has_grid(ExperimentKind k) {
    return k == ExperimentKind::decay || k == ExperimentKind::randomize || k == ExperimentKind::solve ||
           k == ExperimentKind::cone_audit || k == ExperimentKind::trilinear;
}

double max_of(const std::vector<int>& v) {
    double m = 0;
    for (int x : v) m = std::max(m, double(x));
    return m;
}

class Checker {
public:
    explicit Checker(std::vector<std::string>& diag) : diag_(diag) {}
    void require(bool ok, const std::string& key, const std::string& msg) {
        if (!ok) diag_.push_back(key + ": " + msg);
    }
    template <class F>
    void guard(const std::string& key, F&& f) {
        try {
            f();
        } catch (const std::exception& e) {
            diag_.push_back(key + ": " + e.what());
        }
    }

private:
    std::vector<std::string>& diag_;
};

Config resolve(ExperimentKind kind, const Config& c, std::vector<std::string>& diag) {
    Config out;
    auto table = parameter_table(kind);
    for (const auto& p : table) out.set(p.key, c.has(p.key) ? c.text(p.key) : p.def);
    for (const auto& [k, v] : c.entries()) {
        bool known = std::any_of(table.begin(), table.end(), [&](const ParamSpec& p) { return p.key == k; });
        if (!known) diag.push_back(k + ": unknown key for " + std::string(kind_name(kind)));
    }
    for (const auto& p : table) {
        try {
            switch (p.type) {
            case P::integer: out.integer(p.key); break;
            case P::real: out.real(p.key); break;
            case P::u64: out.u64(p.key); break;
            case P::flag: out.flag(p.key); break;
            case P::integers: out.integers(p.key); break;
            case P::reals: out.reals(p.key); break;
            case P::text: break;
            }
        } catch (const Error& e) {
            diag.push_back(std::string(e.what()).substr(std::string("invalid_argument: ").size()));
        }
    }
    return out;
}

void check_kind(ExperimentKind kind, const Config& r, std::vector<std::string>& diag) {
    Checker ck(diag);
    ck.require(r.text("experiment.kind") == kind_name(kind), "experiment.kind",
               "config is for '" + r.text("experiment.kind") + "', not '" + kind_name(kind) + "'");
    ck.require(r.integer("experiment.threads") >= 1, "experiment.threads", "must be at least 1");

    TorusGrid g;
    bool grid_ok = false;
    if (has_grid(kind)) {
        ck.guard("grid", [&] {
            g = TorusGrid(static_cast<int>(r.integer("grid.d")), static_cast<int>(r.integer("grid.n")),
                          r.real("grid.L"));
            g.validate();
            grid_ok = true;
        });
    }
    auto positive = [&](const std::string& key) { ck.require(r.real(key) > 0, key, "must be positive"); };
    auto positive_int = [&](const std::string& key) { ck.require(r.integer(key) > 0, key, "must be positive"); };
    auto positive_list = [&](const std::string& key) {
        auto v = r.integers(key);
        ck.require(!v.empty(), key, "must not be empty");
        for (int x : v) ck.require(x > 0, key, "entries must be positive");
    };
    if (r.has("model.p")) ck.require(r.real("model.p") >= 1, "model.p", "must be at least 1");
    // lab-frame evolutions: the horizon must not exceed half the torus
    auto lab_horizon = [&](double T, const std::string& key) {
        if (grid_ok)
            ck.require(T <= 0.5 * g.L, key,
                       "horizon " + format_real(T) + " exceeds L/2 = " + format_real(0.5 * g.L) + " (wrap-around)");
    };

    switch (kind) {
    case ExperimentKind::decay: {
        auto k = r.integers("decay.k");
        if (grid_ok) ck.require(static_cast<int>(k.size()) == g.d, "decay.k", "needs one entry per dimension");
        ck.require(r.real("decay.r") >= 2, "decay.r", "must be at least 2");
        positive("decay.t_min");
        ck.require(r.real("decay.t_max") > r.real("decay.t_min"), "decay.t_max", "must exceed t_min");
        ck.require(r.integer("decay.samples") >= 3, "decay.samples", "at least 3 samples");
        auto fit = r.text("decay.fit");
        ck.require(fit == "wave" || fit == "kg" || fit == "custom", "decay.fit", "must be wave, kg or custom");
        if (fit == "custom") {
            ck.require(r.real("decay.fit_hi") > r.real("decay.fit_lo"), "decay.fit_hi", "custom window is empty");
            ck.require(std::isfinite(r.real("decay.band_lo")) && std::isfinite(r.real("decay.band_hi")),
                       "decay.band_lo", "a custom window needs an explicit band");
        }
        positive("decay.tolerance");
        positive("decay.width");
        positive("decay.tail_tol");
        break;
    }
    case ExperimentKind::strichartz:
        ck.guard("strichartz.triples", [&] {
            auto ts = parse_triples(r.text("strichartz.triples"));
            if (ts.empty()) throw Error(ErrorCode::invalid_argument, "no triples");
            for (const auto& t : ts) classify_strichartz(t.q, t.r, t.d);
        });
        positive_list("strichartz.ks");
        ck.require(r.real("strichartz.horizon") >= 0, "strichartz.horizon", "must be nonnegative");
        ck.require(r.integer("strichartz.time_samples") >= 8, "strichartz.time_samples", "at least 8");
        positive_int("strichartz.max_n");
        positive("strichartz.tolerance");
        break;
    case ExperimentKind::khinchin:
        ck.guard("khinchin.families", [&] {
            if (parse_families(r.text("khinchin.families")).empty())
                throw Error(ErrorCode::invalid_argument, "no families");
        });
        positive_list("khinchin.sizes");
        for (double p : r.reals("khinchin.ps")) ck.require(p >= 1 && p <= 16, "khinchin.ps", "p must lie in [1,16]");
        ck.require(!r.reals("khinchin.ps").empty(), "khinchin.ps", "must not be empty");
        positive_int("khinchin.draws");
        positive("khinchin.max_constant");
        break;
    case ExperimentKind::maxineq:
        ck.guard("maxineq.family", [&] { parse_family(r.text("maxineq.family")); });
        positive_list("maxineq.sizes");
        for (int J : r.integers("maxineq.sizes")) ck.require(J <= 100000, "maxineq.sizes", "J must be at most 1e5");
        positive_int("maxineq.draws");
        ck.require(r.real("maxineq.max_spread") >= 1, "maxineq.max_spread", "must be at least 1");
        break;
    case ExperimentKind::randomize:
        ck.guard("randomize.family", [&] { parse_family(r.text("randomize.family")); });
        ck.require(r.integer("randomize.K") >= 0, "randomize.K", "must be nonnegative");
        if (grid_ok)
            ck.require(r.integer("randomize.K") <= max_resolved_cell(g), "randomize.K",
                       "cell K + 1 must lie below Nyquist (largest is " + std::to_string(max_resolved_cell(g)) + ")");
        positive_int("randomize.draws");
        positive("randomize.cut");
        ck.require(r.real("randomize.ratio_lo") < r.real("randomize.ratio_hi"), "randomize.ratio_hi",
                   "must exceed ratio_lo");
        break;
    case ExperimentKind::solve: {
        positive("solve.dt");
        positive("solve.horizon");
        positive_int("solve.stride");
        auto data = r.text("solve.data");
        ck.require(data == "noise" || data == "bump", "solve.data", "must be noise or bump");
        positive("solve.cut");
        positive("solve.bump_radius");
        positive("solve.tolerance");
        double T = r.real("solve.horizon"), dt = r.real("solve.dt");
        if (dt > 0 && T > 0) {
            double steps = std::round(T / dt);
            ck.require(std::abs(steps * dt - T) <= 1e-9 * T, "solve.horizon", "must be a multiple of dt");
        }
        lab_horizon(T, "solve.horizon");
        if (grid_ok && data == "bump")
            ck.require(2 * T + 2 * r.real("solve.bump_radius") <= g.L, "solve.horizon",
                       "L must be at least 2 horizon + data support diameter");
        break;
    }
    case ExperimentKind::cone_audit: {
        positive_list("cone.Ns");
        ck.require(!r.reals("cone.shifts").empty(), "cone.shifts", "must not be empty");
        ck.guard("cone.delta", [&] {
            ExponentBudget b;
            b.delta = r.real("cone.delta");
            b.alpha = b.theta + 20 * b.delta + 0.1;
            b.validate();
        });
        positive("cone.dt");
        positive_int("cone.stride");
        positive("cone.cut");
        ck.require(r.real("cone.max_spread") >= 1, "cone.max_spread", "must be at least 1");
        lab_horizon(max_of(r.integers("cone.Ns")), "cone.Ns");
        break;
    }
    case ExperimentKind::bush:
        positive_list("bush.Ns");
        for (int N : r.integers("bush.Ns")) ck.require(N <= 16, "bush.Ns", "desk scale needs N <= 16");
        positive_int("bush.draws");
        ck.require(r.integer("bush.draws") <= 1000, "bush.draws", "at most 1000 draws");
        ck.require(r.real("bush.delta") > 0 && r.real("bush.delta") < 0.02, "bush.delta", "must lie in (0, 1/50)");
        positive("bush.C");
        ck.require(r.real("bush.torus") >= 8 * kPi, "bush.torus", "must be at least 8 pi");
        positive_int("bush.bumps");
        positive("bush.time_step");
        ck.require(r.real("bush.rel_floor") >= 0, "bush.rel_floor", "must be nonnegative");
        ck.guard("bush.family", [&] { parse_family(r.text("bush.family")); });
        break;
    case ExperimentKind::thresholds: {
        ck.require(r.integer("thresholds.d") >= 2, "thresholds.d", "must be at least 2");
        int given = 0;
        for (const char* key : {"thresholds.delta", "thresholds.theta", "thresholds.beta"})
            if (!trim(r.text(key)).empty()) {
                ++given;
                ck.guard(key, [&] { Rational::parse(r.text(key)); });
            }
        ck.require(given == 0 || given == 3, "thresholds.delta", "give all of delta, theta, beta or none");
        break;
    }
    case ExperimentKind::trilinear:
        positive_list("trilinear.Ns");
        positive("trilinear.delta");
        positive("trilinear.dt");
        positive("trilinear.cut");
        lab_horizon(max_of(r.integers("trilinear.Ns")), "trilinear.Ns");
        break;
    }
}

} // namespace

std::vector<std::string> validate_config(ExperimentKind kind, const Config& c) {
    std::vector<std::string> diag;
    auto r = resolve(kind, c, diag);
    if (diag.empty()) check_kind(kind, r, diag);
    return diag;
}

ExperimentConfig ExperimentConfig::from_config(ExperimentKind kind, const Config& c) {
    auto diag = validate_config(kind, c);
    if (!diag.empty()) {
        std::string msg = "invalid " + std::string(kind_name(kind)) + " config";
        for (const auto& d : diag) msg += "\n  " + d;
        throw Error(ErrorCode::invalid_argument, msg);
    }
    std::vector<std::string> unused;
    ExperimentConfig e;
    e.kind = kind;
    e.resolved = resolve(kind, c, unused);
    e.seed = e.resolved.u64("experiment.seed");
    e.threads = static_cast<int>(e.resolved.integer("experiment.threads"));
    return e;
}

TorusGrid ExperimentConfig::grid() const {
    if (!resolved.has("grid.d")) throw Error(ErrorCode::invalid_argument, std::string(kind_name(kind)) + " has no grid");
    return TorusGrid(static_cast<int>(resolved.integer("grid.d")), static_cast<int>(resolved.integer("grid.n")),
                     resolved.real("grid.L"));
}

NonlinearModel ExperimentConfig::model() const {
    int d = resolved.has("grid.d") ? static_cast<int>(resolved.integer("grid.d")) : 2;
    return NonlinearModel(d, resolved.real("model.p", 3));
}

RandomSeedPlan ExperimentConfig::seed_plan() const {
    RandomSeedPlan p;
    p.base_seed = seed;
    for (const char* key : {"randomize.family", "bush.family", "maxineq.family"})
        if (resolved.has(key)) p.family = parse_family(resolved.text(key));
    return p;
}

double ExperimentConfig::horizon() const {
    switch (kind) {
    case ExperimentKind::solve: return resolved.real("solve.horizon");
    case ExperimentKind::cone_audit: return max_of(resolved.integers("cone.Ns"));
    case ExperimentKind::trilinear: return max_of(resolved.integers("trilinear.Ns"));
    default: return 0;
    }
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(resolved.canonical()); }

// ---- emission -------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void CsvTable::add(const std::vector<double>& row) {
    std::vector<std::string> cells;
    for (double x : row) cells.push_back(format_real(x));
    add_cells(std::move(cells));
}

void CsvTable::add_cells(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw Error(ErrorCode::invalid_argument, "CSV row width mismatch");
    rows.push_back(std::move(row));
}

std::string CsvTable::render() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i].name;
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
        out += "\n";
    }
    return out;
}

std::string CsvTable::schema_json(const std::string& file) const {
    Json j = Json::object();
    j["file"] = file;
    Json cols = Json::array();
    for (const auto& c : columns) {
        Json e = Json::object();
        e["name"] = c.name;
        e["description"] = c.doc;
        cols.push(std::move(e));
    }
    j["columns"] = std::move(cols);
    return j.dump();
}

Json::Json(bool b) : type_(Type::boolean), b_(b) {}
Json::Json(double x) : type_(Type::number), x_(x) {}
Json::Json(int x) : type_(Type::integer), i_(x) {}
Json::Json(long x) : type_(Type::integer), i_(x) {}
Json::Json(long long x) : type_(Type::integer), i_(x) {}
Json::Json(unsigned long x) : type_(Type::integer), i_(static_cast<long long>(x)) {}
Json::Json(unsigned long long x) : type_(Type::integer), i_(static_cast<long long>(x)) {}
Json::Json(const char* s) : type_(Type::string), s_(s) {}
Json::Json(std::string s) : type_(Type::string), s_(std::move(s)) {}
Json::Json(const std::vector<double>& xs) : type_(Type::array) {
    for (double x : xs) items_.emplace_back(x);
}
Json::Json(const std::vector<int>& xs) : type_(Type::array) {
    for (int x : xs) items_.emplace_back(x);
}

Json Json::array() {
    Json j;
    j.type_ = Type::array;
    return j;
}

Json Json::object() {
    Json j;
    j.type_ = Type::object;
    return j;
}

Json& Json::operator[](const std::string& key) {
    if (type_ == Type::null) type_ = Type::object;
    if (type_ != Type::object) throw Error(ErrorCode::invalid_argument, "JSON value is not an object");
    for (auto& [k, v] : fields_)
        if (k == key) return v;
    fields_.emplace_back(key, Json());
    return fields_.back().second;
}

void Json::push(Json v) {
    if (type_ == Type::null) type_ = Type::array;
    if (type_ != Type::array) throw Error(ErrorCode::invalid_argument, "JSON value is not an array");
    items_.push_back(std::move(v));
}

namespace {

void write_string(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

} // namespace

void Json::write(std::string& out, int indent, int level) const {
    auto newline = [&](int lv) {
        if (indent <= 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * lv), ' ');
    };
    switch (type_) {
    case Type::null: out += "null"; break;
    case Type::boolean: out += b_ ? "true" : "false"; break;
    case Type::number: out += std::isfinite(x_) ? format_real(x_) : "null"; break;
    case Type::integer: out += std::to_string(i_); break;
    case Type::string: write_string(out, s_); break;
    case Type::array:
        if (items_.empty()) {
            out += "[]";
            break;
        }
        out += '[';
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (i) out += ',';
            newline(level + 1);
            items_[i].write(out, indent, level + 1);
        }
        newline(level);
        out += ']';
        break;
    case Type::object:
        if (fields_.empty()) {
            out += "{}";
            break;
        }
        out += '{';
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i) out += ',';
            newline(level + 1);
            write_string(out, fields_[i].first);
            out += indent > 0 ? ": " : ":";
            fields_[i].second.write(out, indent, level + 1);
        }
        newline(level);
        out += '}';
        break;
    }
}

std::string Json::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

std::uint64_t RunManifest::output_hash() const {
    auto sorted = outputs;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    std::uint64_t h = fnv1a64("");
    for (const auto& o : sorted) h = fnv1a64(o.path + "\n" + hex64(o.hash) + "\n", h);
    return h;
}

std::string RunManifest::to_json() const {
    Json j = Json::object();
    j["kind"] = kind;
    j["version"] = version;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = std::to_string(seed);
    j["started"] = started;
    j["finished"] = finished;
    Json outs = Json::array();
    for (const auto& o : outputs) {
        Json e = Json::object();
        e["path"] = o.path;
        e["fnv1a64"] = hex64(o.hash);
        e["bytes"] = static_cast<unsigned long long>(o.bytes);
        outs.push(std::move(e));
    }
    j["outputs"] = std::move(outs);
    j["output_hash"] = hex64(output_hash());
    j["pass"] = pass;
    Json f = Json::array();
    for (const auto& s : failures) f.push(s);
    j["failures"] = std::move(f);
    return j.dump();
}

void ShardOutput::text(const std::string& name, const std::string& body) {
    auto path = std::filesystem::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << body;
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
    files_.push_back(name);
}

void ShardOutput::csv(const std::string& name, const CsvTable& t) {
    text(name, t.render());
    text(name + ".schema.json", t.schema_json(name));
}

void ShardOutput::json(const std::string& name, const Json& j) { text(name, j.dump()); }

void ShardOutput::field(const std::string& name, const RealField& f) {
    write_field((std::filesystem::path(dir_) / name).string(), f);
    files_.push_back(name);
}

namespace {

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string strip_code(const Error& e) {
    std::string w = e.what();
    std::string prefix = std::string(error_code_name(e.code())) + ": ";
    return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

} // namespace

RunManifest run_shards(const ExperimentConfig& cfg, const std::vector<Shard>& shards, const std::string& out_dir,
                       const std::function<void(ShardOutput&)>& merge) {
    RunManifest man;
    man.kind = kind_name(cfg.kind);
    man.config_hash = cfg.hash();
    man.version = kglab_version();
    man.seed = cfg.seed;
    man.started = utc_now();
    std::filesystem::create_directories(out_dir);

    std::vector<ShardOutput> outs(shards.size(), ShardOutput(out_dir));
    std::vector<std::exception_ptr> errors(shards.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < shards.size(); i = next++) {
            try {
                shards[i].run(outs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t nthreads = std::min<std::size_t>(std::max(cfg.threads, 1), shards.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < shards.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            throw Error(e.code(), "shard " + shards[i].name + ": " + strip_code(e));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::invalid_argument, "shard " + shards[i].name + ": " + e.what());
        }
    }

    ShardOutput final_out(out_dir);
    if (merge) merge(final_out);
    outs.push_back(final_out);

    for (const auto& o : outs) {
        for (const auto& f : o.failures()) man.failures.push_back(f);
        for (const auto& name : o.files()) {
            std::ifstream in(std::filesystem::path(out_dir) / name, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            auto body = ss.str();
            man.outputs.push_back({name, fnv1a64(body), body.size()});
        }
    }
    std::sort(man.outputs.begin(), man.outputs.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    man.pass = man.failures.empty();
    man.finished = utc_now();
    std::ofstream mf(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary);
    if (!mf) throw Error(ErrorCode::io, "cannot write manifest in " + out_dir);
    mf << man.to_json();
    return man;
}

// ---- experiments ----------------------------------------------------------

namespace {

RealField smooth_noise(const TorusGrid& g, std::uint64_t seed, double cut, double amp) {
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
    double sup = lp_norm(out, kInf);
    if (sup > 0) out *= amp / sup;
    return out;
}

RealField bump(const TorusGrid& g, double radius, double amp) {
    return sample(g, [&](const double* x) {
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += x[a] * x[a];
        return amp * smoothstep(1.0 - std::sqrt(r2) / radius);
    });
}

Forcing cosine_forcing(const RealField& h, double amp, double w) {
    return [h, amp, w](double t) {
        RealField x = h;
        x *= amp * std::cos(w * t);
        return x;
    };
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return mix64(seed ^ mix64(tag)); }

std::vector<double> geometric(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(a * std::pow(b / a, double(i) / (n - 1)));
    return out;
}

// Line with the predicted slope through the centroid of the fitted points.
std::vector<double> anchored_line(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi,
                                  double slope) {
    double mx = 0, my = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= lo && x[i] <= hi && y[i] > 0) {
            mx += std::log(x[i]);
            my += std::log(y[i]);
            ++n;
        }
    std::vector<double> out(x.size(), std::nan(""));
    if (n == 0) return out;
    mx /= n;
    my /= n;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(my + slope * (std::log(x[i]) - mx));
    return out;
}

Json fit_json(const RegressionResult& f) {
    Json j = Json::object();
    j["slope"] = f.valid ? f.slope : std::nan("");
    j["intercept"] = f.valid ? f.intercept : std::nan("");
    j["residual_rms"] = f.valid ? f.residual_rms : std::nan("");
    j["window"] = std::vector<double>{f.window_lo, f.window_hi};
    j["points"] = f.points;
    j["valid"] = f.valid;
    if (!f.flag.empty()) j["flag"] = f.flag;
    return j;
}

Json flags_json(const std::vector<std::string>& flags) {
    Json a = Json::array();
    for (const auto& f : flags) a.push(f);
    return a;
}

CsvTable scaling_table() {
    CsvTable t;
    t.columns = {{"t_or_k", "sample time t (decay) or <k> (strichartz)"},
                 {"value", "measured norm ratio"},
                 {"predicted", "power law with the predicted exponent through the centroid of the fitted points"}};
    return t;
}

std::string real_tag(double x) {
    if (std::isinf(x)) return "inf";
    auto s = format_real(x);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

std::vector<Shard> decay_shards(const ExperimentConfig& cfg) {
    return {{"decay", [cfg](ShardOutput& out) {
                 const auto& c = cfg.resolved;
                 auto g = cfg.grid();
                 auto k = c.integers("decay.k");
                 double r = c.real("decay.r");
                 auto ts = geometric(c.real("decay.t_min"), c.real("decay.t_max"),
                                     static_cast<int>(c.integer("decay.samples")));
                 DecayOptions o;
                 o.width = c.real("decay.width");
                 o.tail_tol = c.real("decay.tail_tol");
                 auto fit = c.text("decay.fit");
                 if (fit == "custom") {
                     o.fit_lo = c.real("decay.fit_lo");
                     o.fit_hi = c.real("decay.fit_hi");
                 }
                 auto res = measure_cell_decay(g, k, r, ts, o);
                 const RegressionResult& chosen = fit == "wave" ? res.wave : fit == "kg" ? res.kg : res.custom;
                 double pred = fit == "wave" ? res.predicted_wave : res.predicted_kg;
                 double tol = c.real("decay.tolerance");
                 double lo = c.real("decay.band_lo"), hi = c.real("decay.band_hi");
                 if (std::isnan(lo)) lo = pred - tol;
                 if (std::isnan(hi)) hi = pred + tol;
                 bool pass = chosen.valid && chosen.slope >= lo && chosen.slope <= hi;

                 auto table = scaling_table();
                 auto line = anchored_line(res.t, res.ratio, chosen.window_lo, chosen.window_hi, pred);
                 for (std::size_t i = 0; i < res.t.size(); ++i) table.add({res.t[i], res.ratio[i], line[i]});
                 out.csv("decay.csv", table);

                 Json j = Json::object();
                 j["k"] = k;
                 j["r"] = r;
                 j["fit"] = fit;
                 j["slope"] = chosen.valid ? chosen.slope : std::nan("");
                 j["predicted"] = pred;
                 j["window"] = std::vector<double>{chosen.window_lo, chosen.window_hi};
                 j["band"] = std::vector<double>{lo, hi};
                 j["tolerance_pass"] = pass;
                 j["wave_fit"] = fit_json(res.wave);
                 j["kg_fit"] = fit_json(res.kg);
                 if (fit == "custom") j["custom_fit"] = fit_json(res.custom);
                 j["predicted_wave"] = res.predicted_wave;
                 j["predicted_kg"] = res.predicted_kg;
                 j["crossover"] = res.crossover;
                 j["group_speed"] = res.group_speed;
                 j["support_diameter"] = res.support_diameter;
                 j["flags"] = flags_json(res.flags);
                 out.json("decay.json", j);
                 if (!pass)
                     out.fail("decay slope " + format_real(chosen.slope) + " outside [" + format_real(lo) + ", " +
                              format_real(hi) + "]");
             }}};
}

std::vector<Shard> strichartz_shards(const ExperimentConfig& cfg) {
    std::vector<Shard> out;
    for (const auto& tr : parse_triples(cfg.resolved.text("strichartz.triples"))) {
        std::string tag = "d" + std::to_string(tr.d) + "_q" + real_tag(tr.q) + "_r" + real_tag(tr.r);
        out.push_back({tag, [cfg, tr, tag](ShardOutput& o) {
                           const auto& c = cfg.resolved;
                           StrichartzOptions opt;
                           opt.Ks = c.integers("strichartz.ks");
                           opt.horizon = c.real("strichartz.horizon");
                           opt.time_samples = static_cast<int>(c.integer("strichartz.time_samples"));
                           opt.tail_tol = c.real("strichartz.tail_tol");
                           opt.max_n = static_cast<int>(c.integer("strichartz.max_n"));
                           auto res = measure_cell_strichartz(tr.d, tr.q, tr.r, opt);
                           double tol = c.real("strichartz.tolerance");
                           bool pass = res.fit.valid && std::abs(res.exponent - res.predicted) <= tol;

                           std::vector<double> x, y;
                           for (const auto& cell : res.cells) {
                               x.push_back(cell.bracket);
                               y.push_back(cell.norm);
                           }
                           auto table = scaling_table();
                           auto line = anchored_line(x, y, res.fit.window_lo, res.fit.window_hi, res.predicted);
                           for (std::size_t i = 0; i < x.size(); ++i) table.add({x[i], y[i], line[i]});
                           o.csv("strichartz_" + tag + ".csv", table);

                           Json j = Json::object();
                           j["d"] = tr.d;
                           j["q"] = tr.q;
                           j["r"] = tr.r;
                           j["branch"] = branch_name(res.branch);
                           j["probe"] = res.probe;
                           j["slope"] = res.exponent;
                           j["predicted"] = res.predicted;
                           j["window"] = std::vector<double>{res.fit.window_lo, res.fit.window_hi};
                           j["tolerance"] = tol;
                           j["tolerance_pass"] = pass;
                           j["fit"] = fit_json(res.fit);
                           Json cells = Json::array();
                           for (const auto& cell : res.cells) {
                               Json e = Json::object();
                               e["K"] = cell.K;
                               e["bracket"] = cell.bracket;
                               e["horizon"] = cell.horizon;
                               e["grid_n"] = cell.grid.n;
                               e["grid_L"] = cell.grid.L;
                               e["norm"] = cell.norm;
                               cells.push(std::move(e));
                           }
                           j["cells"] = std::move(cells);
                           o.json("strichartz_" + tag + ".json", j);
                           if (!pass)
                               o.fail("strichartz " + tag + ": exponent " + format_real(res.exponent) +
                                      " vs predicted " + format_real(res.predicted));
                       }});
    }
    return out;
}

std::vector<Shard> khinchin_shards(const ExperimentConfig& cfg) {
    std::vector<Shard> out;
    for (Family fam : parse_families(cfg.resolved.text("khinchin.families"))) {
        std::string name = family_name(fam);
        out.push_back({name, [cfg, fam, name](ShardOutput& o) {
                           const auto& c = cfg.resolved;
                           auto ps = c.reals("khinchin.ps");
                           int draws = static_cast<int>(c.integer("khinchin.draws"));
                           double cmax = c.real("khinchin.max_constant");
                           CsvTable t;
                           t.columns = {{"J", "number of coefficients"},
                                        {"p", "moment"},
                                        {"empirical", "(E|sum a_j X_j|^p)^{1/p}"},
                                        {"bound", "sqrt(p) ||a||_2"},
                                        {"ratio", "empirical / bound"}};
                           Json j = Json::object();
                           j["family"] = name;
                           Json rows = Json::array();
                           double worst = 0;
                           for (int J : c.integers("khinchin.sizes")) {
                               std::mt19937_64 rng(sub_seed(cfg.seed, 0x4b00 + J));
                               std::normal_distribution<double> nd;
                               std::vector<double> a(J);
                               for (auto& x : a) x = nd(rng);
                               auto tab = verify_khinchin(fam, a, ps, draws, sub_seed(cfg.seed, 0x4b80 + J));
                               for (const auto& r : tab.rows) t.add({double(J), r.p, r.empirical, r.bound, r.ratio});
                               Json e = Json::object();
                               e["J"] = J;
                               e["c_hat"] = tab.c_hat;
                               rows.push(std::move(e));
                               worst = std::max(worst, tab.c_hat);
                           }
                           o.csv("khinchin_" + name + ".csv", t);
                           j["constants"] = std::move(rows);
                           j["c_hat"] = worst;
                           j["max_constant"] = cmax;
                           j["pass"] = worst <= cmax;
                           o.json("khinchin_" + name + ".json", j);
                           if (worst > cmax)
                               o.fail("khinchin " + name + ": constant " + format_real(worst) + " > " + format_real(cmax));
                       }});
    }
    return out;
}

std::vector<Shard> maxineq_shards(const ExperimentConfig& cfg) {
    return {{"maxineq", [cfg](ShardOutput& o) {
                 const auto& c = cfg.resolved;
                 Family fam = parse_family(c.text("maxineq.family"));
                 auto Js = c.integers("maxineq.sizes");
                 auto tab = verify_max_inequality(fam, Js, static_cast<int>(c.integer("maxineq.draws")),
                                                  sub_seed(cfg.seed, 0x4d41));
                 CsvTable t;
                 t.columns = {{"J", "number of variables"},
                              {"empirical", "Monte Carlo E max_j |X_j|"},
                              {"bound", "log <J>"},
                              {"ratio", "empirical / bound"},
                              {"asymptotic", "sqrt(2 ln J)"},
                              {"exact", "quadrature value of E max |g_j| (gaussian family only, nan otherwise)"}};
                 for (const auto& r : tab.rows)
                     t.add({double(r.J), r.empirical, r.bound, r.ratio, std::sqrt(2 * std::log(double(r.J))),
                            fam == Family::gaussian ? gaussian_expected_abs_max(r.J) : std::nan("")});
                 o.csv("maxineq.csv", t);
                 double spread_max = c.real("maxineq.max_spread");
                 Json j = Json::object();
                 j["family"] = family_name(fam);
                 j["spread"] = tab.spread;
                 j["max_spread"] = spread_max;
                 j["pass"] = tab.spread < spread_max;
                 o.json("maxineq.json", j);
                 if (!(tab.spread < spread_max)) o.fail("maxineq spread " + format_real(tab.spread));
             }}};
}

std::vector<Shard> randomize_shards(const ExperimentConfig& cfg) {
    return {{"randomize", [cfg](ShardOutput& o) {
                 const auto& c = cfg.resolved;
                 auto g = cfg.grid();
                 int K = static_cast<int>(c.integer("randomize.K"));
                 int draws = static_cast<int>(c.integer("randomize.draws"));
                 Family fam = parse_family(c.text("randomize.family"));
                 double cut = c.real("randomize.cut");
                 auto f = smooth_noise(g, sub_seed(cfg.seed, 0x5246), cut, 1.0);
                 auto gg = smooth_noise(g, sub_seed(cfg.seed, 0x5247), cut, 0.5);
                 double ef = atom_energy(f, K), eg = atom_energy(gg, K);
                 CsvTable t;
                 t.columns = {{"draw", "draw index"},
                              {"norm2_f", "||f^w||_2^2"},
                              {"norm2_g", "||g^w||_2^2"}};
                 double mf = 0, mg = 0;
                 for (int d = 0; d < draws; ++d) {
                     RandomSeedPlan plan{sub_seed(cfg.seed, 0x10000 + d), fam, false};
                     auto pair = randomize_data(f, gg, plan, K);
                     double nf = lp_norm(pair.u, 2), ng = lp_norm(pair.ut, 2);
                     t.add({double(d), nf * nf, ng * ng});
                     mf += nf * nf;
                     mg += ng * ng;
                     if (d == 0) {
                         o.field("f_omega.bin", pair.u);
                         o.field("g_omega.bin", pair.ut);
                         o.text("plan.json", plan.to_json() + "\n");
                     }
                 }
                 mf /= draws;
                 mg /= draws;
                 o.csv("randomize.csv", t);
                 double lo = c.real("randomize.ratio_lo"), hi = c.real("randomize.ratio_hi");
                 double rf = mf / ef, rg = mg / eg;
                 bool pass = rf >= lo && rf <= hi && rg >= lo && rg <= hi;
                 Json j = Json::object();
                 j["K"] = K;
                 j["family"] = family_name(fam);
                 j["atom_energy_f"] = ef;
                 j["atom_energy_g"] = eg;
                 j["mean_norm2_f"] = mf;
                 j["mean_norm2_g"] = mg;
                 j["ratio_f"] = rf;
                 j["ratio_g"] = rg;
                 j["pass"] = pass;
                 o.json("randomize.json", j);
                 if (!pass) o.fail("randomize isometry ratios " + format_real(rf) + ", " + format_real(rg));
             }}};
}

std::vector<Shard> solve_shards(const ExperimentConfig& cfg) {
    return {{"solve", [cfg](ShardOutput& o) {
                 const auto& c = cfg.resolved;
                 auto g = cfg.grid();
                 auto m = cfg.model();
                 double dt = c.real("solve.dt"), T = c.real("solve.horizon");
                 int steps = static_cast<int>(std::lround(T / dt));
                 int stride = static_cast<int>(std::min<long>(c.integer("solve.stride"), steps));
                 StatePair st(g);
                 if (c.text("solve.data") == "bump") {
                     st.u = bump(g, c.real("solve.bump_radius"), c.real("solve.amplitude"));
                     st.ut = bump(g, c.real("solve.bump_radius"), c.real("solve.ut_amplitude"));
                 } else {
                     st.u = smooth_noise(g, sub_seed(cfg.seed, 0x5355), c.real("solve.cut"), c.real("solve.amplitude"));
                     st.ut = smooth_noise(g, sub_seed(cfg.seed, 0x5356), c.real("solve.cut"),
                                          c.real("solve.ut_amplitude"));
                 }
                 double A = c.real("solve.forcing_amplitude");
                 Forcing F;
                 if (A != 0)
                     F = cosine_forcing(smooth_noise(g, sub_seed(cfg.seed, 0x5346), 2.0, 1.0), A,
                                        c.real("solve.forcing_frequency"));
                 StrangStepper stepper(g, m, F);
                 CsvTable t;
                 t.columns = {{"t", "time"},
                              {"E", "energy of the solution (of v for forced runs)"},
                              {"bound", F ? "E at the first checkpoint plus C_hat times the integrated right-hand side "
                                            "of the energy derivative inequality"
                                          : "E(0); the unforced energy is conserved"}};
                 Json j = Json::object();
                 j["steps"] = steps;
                 j["dt"] = dt;
                 j["horizon"] = T;
                 j["forced"] = static_cast<bool>(F);
                 bool pass = true;
                 std::string why;
                 if (!F) {
                     auto tr = stepper.integrate(st, 0, dt, steps, stride);
                     double e0 = energy(tr.states.front(), m).total, drift = 0;
                     for (std::size_t i = 0; i < tr.t.size(); ++i) {
                         double e = energy(tr.states[i], m, tr.t[i]).total;
                         drift = std::max(drift, std::abs(e / e0 - 1));
                         t.add({tr.t[i], e, e0});
                     }
                     double tol = c.real("solve.tolerance");
                     pass = drift < tol;
                     j["relative_drift"] = drift;
                     j["tolerance"] = tol;
                     if (!pass) why = "energy drift " + format_real(drift);
                     if (c.flag("solve.snapshots")) {
                         o.field("u_initial.bin", tr.states.front().u);
                         o.field("u_final.bin", tr.states.back().u);
                         o.field("ut_final.bin", tr.states.back().ut);
                     }
                 } else {
                     auto series = forced_energy_series(st, m, F, dt, steps, 1);
                     int cps = std::min(100, std::max(3, steps / 4));
                     auto chk = energy_derivative_check(series, m.p, cps);
                     // e at the checkpoints by nearest sample
                     auto e_at = [&](double tt) {
                         auto it = std::lower_bound(series.t.begin(), series.t.end(), tt - 0.5 * dt);
                         return series.e[static_cast<std::size_t>(std::min<long>(it - series.t.begin(),
                                                                                   long(series.e.size()) - 1))];
                     };
                     double b = e_at(chk.t.front()), worst = 0;
                     for (std::size_t i = 0; i < chk.t.size(); ++i) {
                         if (i) b += chk.c_hat * 0.5 * (chk.rhs[i] + chk.rhs[i - 1]) * (chk.t[i] - chk.t[i - 1]);
                         double e = e_at(chk.t[i]);
                         worst = std::max(worst, e / b);
                         t.add({chk.t[i], e, b});
                     }
                     pass = std::isfinite(chk.c_hat) && worst <= 1 + 1e-3;
                     j["c_hat"] = chk.c_hat;
                     j["max_energy_over_bound"] = worst;
                     if (!pass) why = "energy exceeds the integrated bound by " + format_real(worst);
                     if (m.d == 4 || m.d == 5) {
                         auto gb = gronwall_bound(m.d, series);
                         j["gronwall_c_hat"] = gb.c_hat;
                     }
                     if (c.flag("solve.snapshots")) {
                         auto tr = stepper.integrate(st, 0, dt, steps, steps);
                         o.field("u_initial.bin", tr.states.front().u);
                         o.field("u_final.bin", tr.states.back().u);
                         o.field("ut_final.bin", tr.states.back().ut);
                     }
                 }
                 j["pass"] = pass;
                 o.csv("energy.csv", t);
                 o.json("solve.json", j);
                 if (!pass) o.fail("solve: " + why);
             }}};
}

struct ConeSlot {
    Cone cone;
    FluxReport report;
};

Json cone_json(const Cone& c) {
    Json j = Json::object();
    j["t0"] = c.t0;
    j["x0"] = c.x0;
    j["N"] = c.N;
    return j;
}

std::vector<Shard> cone_shards(const ExperimentConfig& cfg, std::shared_ptr<std::vector<ConeSlot>> slots) {
    const auto& c = cfg.resolved;
    auto g = cfg.grid();
    for (int N : c.integers("cone.Ns"))
        for (double s : c.reals("cone.shifts")) {
            Cone k{0.0, std::vector<double>(g.d, 0.0), double(N)};
            k.x0[0] = s;
            slots->push_back({k, {}});
        }
    std::vector<Shard> out;
    for (std::size_t i = 0; i < slots->size(); ++i) {
        const Cone& k = (*slots)[i].cone;
        std::string tag = "N" + std::to_string(static_cast<int>(k.N)) + "_x" + real_tag(k.x0[0]);
        out.push_back({tag, [cfg, slots, i, tag](ShardOutput& o) {
                           const auto& c = cfg.resolved;
                           auto g = cfg.grid();
                           auto m = cfg.model();
                           auto& slot = (*slots)[i];
                           const Cone& K = slot.cone;
                           StatePair v(smooth_noise(g, sub_seed(cfg.seed, 0x4356), c.real("cone.cut"),
                                                    c.real("cone.amplitude")),
                                       smooth_noise(g, sub_seed(cfg.seed, 0x4357), c.real("cone.cut"),
                                                    c.real("cone.ut_amplitude")));
                           auto F = cosine_forcing(smooth_noise(g, sub_seed(cfg.seed, 0x4346), 2.0, 1.0),
                                                   c.real("cone.forcing_amplitude"), c.real("cone.forcing_frequency"));
                           double A = c.real("cone.forcing_amplitude");
                           Forcing Fk = A != 0 ? cone_forcing(F, K) : Forcing{};
                           double dt = c.real("cone.dt");
                           int steps = static_cast<int>(std::ceil(K.N / dt - 1e-9));
                           int stride = static_cast<int>(c.integer("cone.stride"));
                           StrangStepper st(g, m, Fk);
                           auto tr = st.integrate(localized_data(v, K), 0.0, dt, steps, stride);
                           auto r = flux_audit(tr, K, A != 0 ? F : Forcing{}, c.real("cone.delta"));
                           slot.report = r;
                           Json j = Json::object();
                           j["cone"] = cone_json(K);
                           Json lhs = Json::object();
                           lhs["e_tilde"] = r.e_tilde;
                           lhs["f_tilde"] = r.f_tilde;
                           j["lhs"] = std::move(lhs);
                           Json rhs = Json::object();
                           rhs["e_base"] = r.e_base;
                           rhs["initial_energy"] = r.initial_energy;
                           rhs["s_norm"] = r.s_norm;
                           rhs["trilinear"] = r.trilinear;
                           rhs["thickness"] = r.thickness;
                           j["rhs"] = std::move(rhs);
                           Json con = Json::object();
                           con["c0_ratio"] = r.c0_ratio;
                           con["c0_hat"] = r.c0_hat;
                           con["ce_hat"] = r.ce_hat;
                           con["cf_hat"] = r.cf_hat;
                           j["constant"] = std::move(con);
                           bool ok = std::isfinite(r.ce_hat) && std::isfinite(r.cf_hat);
                           j["pass"] = ok;
                           o.json("cone_" + tag + ".json", j);
                           if (!ok) o.fail("cone " + tag + ": non-finite constant");
                       }});
    }
    return out;
}

std::vector<Shard> bush_shards(const ExperimentConfig& cfg) {
    return {{"bush", [cfg](ShardOutput& o) {
                 const auto& c = cfg.resolved;
                 BushMonteCarloOptions opt;
                 opt.draws = static_cast<int>(c.integer("bush.draws"));
                 opt.delta = c.real("bush.delta");
                 opt.C = c.real("bush.C");
                 opt.L = c.real("bush.torus");
                 opt.bumps = static_cast<int>(c.integer("bush.bumps"));
                 opt.time_step = c.real("bush.time_step");
                 opt.rel_floor = c.real("bush.rel_floor");
                 opt.seed = cfg.seed;
                 opt.family = parse_family(c.text("bush.family"));
                 opt.force_unit = c.flag("bush.force_unit");
                 auto res = montecarlo_bush_supnorm(c.integers("bush.Ns"), opt);
                 const int d = 2;

                 CsvTable scaling;
                 scaling.columns = {{"N", "scale"},
                                    {"m", "dyadic amplitude exponent of the chosen class"},
                                    {"mu", "bush threshold ceil(N^{(d-6)/4} #A_m)"},
                                    {"packets", "packets built"},
                                    {"bush_size", "tubes in the measured bush"},
                                    {"bush_count", "bushes in the chosen class"},
                                    {"remainder_size", "tubes left in the remainder"},
                                    {"psi_b", "psi estimate of the bush statistic"},
                                    {"psi_d", "psi estimate of the remainder statistic"},
                                    {"offtube_mean", "draw average of the normalized off-tube sup"},
                                    {"skipped", "draws skipped for lack of a bush"}};
                 bool audits = true;
                 for (const auto& r : res.rows) {
                     scaling.add({double(r.N), double(r.m), double(r.mu), double(r.packets), double(r.bush_size),
                                  double(r.bush_count), double(r.remainder_size), r.psi_b, r.psi_d, r.offtube_mean,
                                  double(r.skipped)});
                     auto tag = std::to_string(r.N);
                     Json dec = Json::object();
                     dec["N"] = r.N;
                     dec["m"] = r.m;
                     dec["mu"] = r.mu;
                     Json bushes = Json::array();
                     for (const auto& b : r.decomposition.bushes) {
                         Json e = Json::object();
                         e["anchor"] = b.anchor;
                         std::vector<int> mem(b.members.begin(), b.members.end());
                         e["members"] = mem;
                         bushes.push(std::move(e));
                     }
                     dec["bushes"] = std::move(bushes);
                     dec["remainder_count"] = static_cast<unsigned long long>(r.decomposition.remainder.size());
                     Json au = Json::object();
                     au["partition"] = r.audit.partition;
                     au["sizes"] = r.audit.sizes;
                     au["anchors"] = r.audit.anchors;
                     au["remainder"] = r.audit.remainder;
                     au["max_remainder_count"] = r.audit.max_remainder_count;
                     au["cubes_checked"] = static_cast<unsigned long long>(r.audit.cubes_checked);
                     dec["audit"] = std::move(au);
                     o.json("bush_decomposition_N" + tag + ".json", dec);
                     if (r.skipped == 0 && !r.audit.ok()) audits = false;

                     CsvTable samples;
                     samples.columns = {{"draw", "draw index"},
                                        {"b", "normalized bush statistic"},
                                        {"dstat", "normalized remainder statistic (nan without remainder)"},
                                        {"offtube", "normalized off-tube sup"}};
                     for (std::size_t i = 0; i < r.b.size(); ++i)
                         samples.add({double(i), r.b[i], i < r.dstat.size() ? r.dstat[i] : std::nan(""),
                                      r.offtube[i]});
                     o.csv("bush_samples_N" + tag + ".csv", samples);

                     CsvTable tail;
                     tail.columns = {{"lambda", "threshold"},
                                     {"survival_b", "fraction of draws with |b| > lambda"},
                                     {"survival_d", "fraction of draws with |dstat| > lambda"}};
                     double top = 0;
                     for (double x : r.b) top = std::max(top, std::abs(x));
                     for (double x : r.dstat) top = std::max(top, std::abs(x));
                     auto surv = [](const std::vector<double>& xs, double l) {
                         if (xs.empty()) return std::nan("");
                         double n = 0;
                         for (double x : xs) n += std::abs(x) > l;
                         return n / xs.size();
                     };
                     for (int q = 0; q <= 40 && top > 0; ++q) {
                         double l = top * q / 40.0;
                         tail.add({l, surv(r.b, l), surv(r.dstat, l)});
                     }
                     o.csv("bush_tail_N" + tag + ".csv", tail);
                 }
                 o.csv("bush_scaling.csv", scaling);

                 double growth_max = d * opt.delta + c.real("bush.growth_tolerance");
                 double off_max = c.real("bush.offtube_slope_max");
                 bool growth_ok = std::isfinite(res.growth_slope) && res.growth_slope <= growth_max;
                 bool off_ok = std::isfinite(res.offtube_slope) && res.offtube_slope <= off_max;
                 Json j = Json::object();
                 j["c_fit"] = res.c_fit;
                 j["growth_slope"] = res.growth_slope;
                 j["growth_slope_max"] = growth_max;
                 j["offtube_slope"] = res.offtube_slope;
                 j["offtube_slope_max"] = off_max;
                 j["audits_ok"] = audits;
                 j["growth_pass"] = growth_ok;
                 j["offtube_pass"] = off_ok;
                 j["flags"] = flags_json(res.flags);
                 o.json("bush.json", j);
                 if (!audits) o.fail("bush decomposition invariants violated");
                 if (!growth_ok) o.fail("bush psi growth slope " + format_real(res.growth_slope));
                 if (!off_ok) o.fail("off-tube slope " + format_real(res.offtube_slope));
             }}};
}

std::vector<Shard> threshold_shards(const ExperimentConfig& cfg) {
    return {{"thresholds", [cfg](ShardOutput& o) {
                 const auto& c = cfg.resolved;
                 int d = static_cast<int>(c.integer("thresholds.d"));
                 bool limit = trim(c.text("thresholds.delta")).empty();
                 auto r = limit ? regularity_threshold_limit(d)
                                : regularity_threshold(d, Rational::parse(c.text("thresholds.delta")),
                                                       Rational::parse(c.text("thresholds.theta")),
                                                       Rational::parse(c.text("thresholds.beta")));
                 Json j = Json::object();
                 j["d"] = d;
                 j["mode"] = limit ? "limit" : "given";
                 j["delta"] = r.delta.str();
                 j["theta"] = r.theta.str();
                 j["beta"] = r.beta.str();
                 j["s_min"] = r.s_min.str();
                 j["s_min_value"] = r.s_min.to_double();
                 j["s_energy"] = r.s_energy.str();
                 j["s_dispersive"] = r.s_dispersive.str();
                 j["s_limit"] = r.s_limit.str();
                 j["theta_opt"] = r.theta_opt.str();
                 j["feasible"] = r.feasible;
                 j["binding"] = r.binding;
                 o.json("thresholds.json", j);
                 if (!r.feasible) o.fail("thresholds: infeasible (s_min = " + r.s_min.str() + " >= 1)");
             }}};
}

struct TriSlot {
    int N = 0;
    TrilinearResult r;
};

std::vector<Shard> trilinear_shards(const ExperimentConfig& cfg, std::shared_ptr<std::vector<TriSlot>> slots) {
    for (int N : cfg.resolved.integers("trilinear.Ns")) slots->push_back({N, {}});
    std::vector<Shard> out;
    for (std::size_t i = 0; i < slots->size(); ++i) {
        std::string tag = "N" + std::to_string((*slots)[i].N);
        out.push_back({tag, [cfg, slots, i, tag](ShardOutput& o) {
                           const auto& c = cfg.resolved;
                           auto g = cfg.grid();
                           auto m = cfg.model();
                           int N = (*slots)[i].N;
                           double dt = c.real("trilinear.dt");
                           int steps = static_cast<int>(std::ceil(N / dt - 1e-9));
                           StatePair st(smooth_noise(g, sub_seed(cfg.seed, 0x5455), c.real("trilinear.cut"),
                                                     c.real("trilinear.amplitude")),
                                        smooth_noise(g, sub_seed(cfg.seed, 0x5456), c.real("trilinear.cut"),
                                                     0.5 * c.real("trilinear.amplitude")));
                           auto u = StrangStepper(g, m).integrate(st, 0.0, dt, steps);
                           auto pieces = dyadic_free_pieces(st, {N}, dt, steps);
                           Cone K{0.0, std::vector<double>(g.d, 0.0), double(N)};
                           auto r = trilinear_cone_integral(pieces.pieces.at(N), u, u, K, c.real("trilinear.s"),
                                                            c.real("trilinear.delta"));
                           (*slots)[i].r = r;
                           Json j = Json::object();
                           j["cone"] = cone_json(K);
                           j["integral"] = r.integral;
                           j["u1_l2"] = r.u1_l2;
                           j["u2_l2"] = r.u2_l2;
                           j["u2_lq"] = r.u2_lq;
                           j["force"] = r.force;
                           j["d_f"] = r.d_f;
                           j["bound"] = r.bound;
                           j["c_hat"] = r.c_hat;
                           o.json("trilinear_" + tag + ".json", j);
                           if (!std::isfinite(r.c_hat)) o.fail("trilinear " + tag + ": non-finite constant");
                       }});
    }
    return out;
}

} // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto errs = validate_config(cfg.kind, cfg.resolved);
    if (!errs.empty()) {
        std::string msg = "invalid config";
        for (const auto& e : errs) msg += "\n  " + e;
        throw Error(ErrorCode::invalid_argument, msg);
    }
    switch (cfg.kind) {
    case ExperimentKind::decay: return run_shards(cfg, decay_shards(cfg), out_dir);
    case ExperimentKind::strichartz: return run_shards(cfg, strichartz_shards(cfg), out_dir);
    case ExperimentKind::khinchin: return run_shards(cfg, khinchin_shards(cfg), out_dir);
    case ExperimentKind::maxineq: return run_shards(cfg, maxineq_shards(cfg), out_dir);
    case ExperimentKind::randomize: return run_shards(cfg, randomize_shards(cfg), out_dir);
    case ExperimentKind::solve: return run_shards(cfg, solve_shards(cfg), out_dir);
    case ExperimentKind::cone_audit: {
        auto slots = std::make_shared<std::vector<ConeSlot>>();
        auto shards = cone_shards(cfg, slots);
        double spread = cfg.resolved.real("cone.max_spread");
        return run_shards(cfg, shards, out_dir, [slots, spread](ShardOutput& o) {
            std::vector<FluxReport> reps;
            Json cones = Json::array();
            for (const auto& s : *slots) {
                reps.push_back(s.report);
                Json e = Json::object();
                e["cone"] = cone_json(s.cone);
                e["ce_hat"] = s.report.ce_hat;
                e["cf_hat"] = s.report.cf_hat;
                cones.push(std::move(e));
            }
            auto v = flux_verdict(reps, spread);
            Json j = Json::object();
            j["cones"] = std::move(cones);
            j["ce_spread"] = v.ce_spread;
            j["cf_spread"] = v.cf_spread;
            j["max_spread"] = spread;
            j["pass"] = v.pass;
            o.json("cone_audit.json", j);
            if (!v.pass)
                o.fail("cone-audit: constants not uniform (spreads " + format_real(v.ce_spread) + ", " +
                       format_real(v.cf_spread) + ")");
        });
    }
    case ExperimentKind::bush: return run_shards(cfg, bush_shards(cfg), out_dir);
    case ExperimentKind::thresholds: return run_shards(cfg, threshold_shards(cfg), out_dir);
    case ExperimentKind::trilinear: {
        auto slots = std::make_shared<std::vector<TriSlot>>();
        auto shards = trilinear_shards(cfg, slots);
        return run_shards(cfg, shards, out_dir, [slots](ShardOutput& o) {
            Json j = Json::object();
            Json rows = Json::array();
            double lo = kInf, hi = 0;
            for (const auto& s : *slots) {
                Json e = Json::object();
                e["N"] = s.N;
                e["c_hat"] = s.r.c_hat;
                rows.push(std::move(e));
                if (s.r.c_hat > 0) {
                    lo = std::min(lo, s.r.c_hat);
                    hi = std::max(hi, s.r.c_hat);
                }
            }
            j["scales"] = std::move(rows);
            // reported, not asserted
            j["c_hat_spread"] = hi > 0 ? hi / lo : std::nan("");
            o.json("trilinear.json", j);
        });
    }
    }
    throw Error(ErrorCode::invalid_argument, "unhandled kind");
}

} // namespace kglab
