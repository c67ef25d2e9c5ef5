#pragma once

#include <map>
#include <string>
#include <vector>

#include "kglab/rational.hpp"
#include "kglab/solver.hpp"

namespace kglab {

enum class ConeKind { standard, wide };

// {t0 <= t <= t0+N, |x - x0|_inf <= cN - (t - t0)}, c = 2 (standard) or 10 (wide).
// Spatial distances use the minimal periodic image.
struct Cone {
    double t0 = 0;
    std::vector<double> x0;
    double N = 1;
    ConeKind kind = ConeKind::standard;

    double base_factor() const { return kind == ConeKind::wide ? 10.0 : 2.0; }
    // Half side of the slice at time t; negative outside [t0, t0+N].
    double half_width(double t) const;
    Cone widened() const;
};

bool cone_membership(const Cone& c, double t, const double* x, double period = 0);
// Indicator of the slice at time t on the grid.
std::vector<char> cone_slice(const Cone& c, const TorusGrid& g, double t);

// Energy density 1/2 u_t^2 + 1/2 u^2 + 1/2 |grad u|^2 + |u|^{p+1}/(p+1) per sample.
std::vector<double> energy_density(const StatePair& s, const NonlinearModel& m);

// Max over stored slices in [t0, t0+N] of the energy on the cone slice.
double local_energy(const Trajectory& traj, const Cone& c);

struct ForceLattice {
    double thickness = 0;
    double spacing = 0;
    int time_points = 0;
    int space_points = 0;
};

// sup over (t', x') of the integral of |u|^{p+1} over ||x-x'| - |t-t'|| <= N^{10 delta}, t in [t0, t0+N];
// t' in [t0, t0+N] and |x' - x0| <= 3N sampled with spacing N^{10 delta}/2.
double local_force(const Trajectory& traj, const Cone& c, double delta, ForceLattice* info = nullptr);

// Smooth cutoff equal to 1 on |x - x0|_inf <= 2N and 0 outside |x - x0|_inf <= 3N.
RealField cone_cutoff(const Cone& c, const TorusGrid& g);
StatePair localized_data(const StatePair& v, const Cone& c);
// F chi_K with the sharp indicator of the (standard) cone.
Forcing cone_forcing(const Forcing& f, const Cone& c);

struct FluxReport {
    double e_base = 0;          // e^N: int over |x-x0|_inf <= 3N of v_t^2 + v^2 + |grad v|^2 + |v|^{p+1}
    double initial_energy = 0;  // E(w(t0))
    double e_tilde = 0;         // local energy over the wide cone
    double f_tilde = 0;
    double wide_initial = 0;    // energy on the wide-cone slice at t0
    double s_norm = 0;          // ||F chi_K||_S
    double trilinear = 0;       // int_K |F| |w_t| |w|^{p-1}
    double c0_ratio = 0;        // e_tilde / wide_initial
    double c0_hat = 0;          // E(w(t0)) / e_base
    double ce_hat = 0;          // smallest C in the local energy inequality
    double cf_hat = 0;          // smallest C in the force inequality
    double thickness = 0;
};

// Evaluates both energy-method inequalities for a trajectory w of the localized equation.
FluxReport flux_audit(const Trajectory& w, const Cone& c, const Forcing& f, double delta);

struct FluxVerdict {
    double ce_spread = 0;
    double cf_spread = 0;
    bool pass = false;
};

// Constants uniform across a cone family: spread of the positive constants below max_spread.
FluxVerdict flux_verdict(const std::vector<FluxReport>& reports, double max_spread = 2.0);

// sup |u_a - u_b| over the grid points of the cone, at stored slices in [t0, t0+N].
double cone_difference(const Trajectory& a, const Trajectory& b, const Cone& c);
// True when a and b agree to tol on |x - x0|_inf <= 2N.
bool agree_on_base(const StatePair& a, const StatePair& b, const Cone& c, double tol = 0);

// Exponents d, s, delta, theta, alpha, beta of the induction and their admissibility.
struct ExponentBudget {
    int d = 4;
    double s = 1;
    double delta = 0.01;
    double theta = 0.1;
    double alpha = 0.5;
    double beta = 0.1;

    void validate() const;
};

// Dyadic pieces F_N on a shared uniform time grid; F is their sum.
struct DyadicForcing {
    std::vector<double> t;
    std::map<int, std::vector<RealField>> pieces;

    RealField total(std::size_t j) const;
    const TorusGrid& grid() const;
};

// F_N(t) = pi_1 K(t)(P_N u0, P_N u1) on t = j dt, j = 0..steps.
DyadicForcing dyadic_free_pieces(const StatePair& data, const std::vector<int>& Ns, double dt, int steps);

struct ConditionResult {
    std::string name;
    bool pass = false;
    double value = 0;
    double threshold = 0;
    double margin = 0;
    std::vector<std::string> flags;
};

struct ConditionReport {
    std::vector<ConditionResult> conditions;
    bool all_pass() const;
};

// Conditions (i)-(iv) for a dyadic forcing on its time horizon; (iv) is evaluated against each
// test trajectory on the cone lattice t0 in {0, N, .., floor(N^theta) N}, x0 in N Z^d.
ConditionReport check_conditions(const DyadicForcing& F, const ExponentBudget& budget, double eta,
                                 const NonlinearModel& m, const std::vector<Trajectory>& tests,
                                 const std::vector<int>& Ns);

struct ThresholdReport {
    int d = 0;
    Rational delta, theta, beta;
    Rational s_energy;     // theta + 20 delta + (d+2)/8 + 2 d delta
    Rational s_dispersive; // 1 + beta - (d-3) theta / 2
    Rational s_min;
    Rational s_limit;      // (d^2 - d + 10) / (8 (d - 1))
    Rational theta_opt;    // (6 - d) / (4 (d - 1))
    bool feasible = false;
    std::string binding;
};

ThresholdReport regularity_threshold(int d, const Rational& delta, const Rational& theta, const Rational& beta);
// Limit delta, beta -> 0 with theta at the balancing value.
ThresholdReport regularity_threshold_limit(int d);

} // namespace kglab
