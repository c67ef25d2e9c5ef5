#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kglab/grid.hpp"
#include "kglab/propagator.hpp"

namespace kglab {

// u_tt - Lap u + u + |u|^{p-1} u = 0 (defocusing). p = 1 is the free equation.
struct NonlinearModel {
    int d = 2;
    double p = 3.0;

    NonlinearModel() = default;
    NonlinearModel(int d_, double p_);
    // Energy-critical power (d+2)/(d-2); needs d >= 3.
    static NonlinearModel critical(int d);

    bool linear() const { return p == 1.0; }
    double apply(double u) const;
    // Strichartz pair of the S-norm, L^p_t L^{2p}_x.
    double s_time() const { return p; }
    double s_space() const { return 2 * p; }
};

// F(t); an empty function means no forcing.
using Forcing = std::function<RealField(double t)>;

struct EnergyRecord {
    double t = 0;
    double kinetic = 0;
    double linear = 0;
    double potential = 0;
    double total = 0;
};

EnergyRecord energy(const StatePair& s, const NonlinearModel& m, double t = 0);

struct Trajectory {
    NonlinearModel model;
    double dt = 0;
    std::vector<double> t;
    std::vector<StatePair> states;
};

// Half exact linear flow, kick u_t -= dt |u+F|^{p-1}(u+F) at the mid time, half exact linear flow.
class StrangStepper {
public:
    StrangStepper(const TorusGrid& g, NonlinearModel m, Forcing f = {});
    StatePair step(const StatePair& s, double t, double dt) const;
    // steps from t0 with snapshots every stride steps (first and last always kept).
    Trajectory integrate(const StatePair& s, double t0, double dt, int steps, int stride = 1) const;

private:
    PairFlow flow_;
    NonlinearModel model_;
    Forcing forcing_;
};

StatePair step_strang(const StatePair& s, double dt, const NonlinearModel& m, const Forcing& f = {},
                      double t = 0);

struct ContractionReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> distances;
    std::vector<double> factors;
    double free_norm = 0;
    double forcing_norm = 0;
};

struct ContractionResult {
    Trajectory trajectory;
    ContractionReport report;
};

// Picard iteration of the Duhamel map on [t0, t0 + steps*dt] with trapezoid time quadrature.
// Throws interval_too_large when the measured contraction factor of the first step exceeds 1/2,
// or when eta > 0 and the free plus forcing S-norms exceed eta; divergence after max_iter.
ContractionResult local_solve_contraction(const StatePair& data, const NonlinearModel& m, const Forcing& f,
                                          double t0, double dt, int steps, double eta = 0, double tol = 1e-8,
                                          int max_iter = 50);

// Duhamel map applied to the stored u samples of a trajectory (uniform step, stride 1).
std::vector<StatePair> duhamel_map(const Trajectory& traj, const Forcing& f);
// sup_j ||u(t_j) - Duhamel(u)(t_j)||_2.
double duhamel_residual(const Trajectory& traj, const Forcing& f);

// S-norm distance between the u components of two trajectories on the same time grid.
double s_distance(const Trajectory& a, const Trajectory& b);

struct EnergySeries {
    std::vector<double> t;
    std::vector<double> e;
    std::vector<double> f_r1;   // ||F(t)||_{L^{r1}}, r1 = 2(p+1)/(3-p)
    std::vector<double> f_2p;   // ||F(t)||_{L^{2p}}
    std::vector<double> f_inf;  // ||F(t)||_{L^inf}
    std::vector<double> f_10;   // ||F(t)||_{L^10}
};

// Forced run of v_tt - Lap v + v + N(v + F) = 0 recording the energy of v and forcing norms.
EnergySeries forced_energy_series(const StatePair& s, const NonlinearModel& m, const Forcing& f, double dt,
                                  int steps, int stride = 1);

// Exponent r1 = 2(p+1)/(3-p) of the forcing in the energy derivative bound; infinity at p = 3.
double energy_forcing_exponent(double p);

struct DerivativeCheck {
    std::vector<double> t;
    std::vector<double> de;
    std::vector<double> rhs;
    std::vector<double> ratio;
    double c_hat = 0;
};

// |e'(t)| (central differences) against e^{1/2+(p-1)/(p+1)} ||F||_{r1} + e^{1/2} ||F||_{2p}^p at
// evenly spaced interior checkpoints.
DerivativeCheck energy_derivative_check(const EnergySeries& s, double p, int checkpoints = 100);

struct GronwallResult {
    std::vector<double> bound;
    std::vector<double> ratio;
    double c_hat = 0;
};

// Integrated bounds for d = 4 and d = 5 built from cumulative forcing norms of the series.
GronwallResult gronwall_bound(int d, const EnergySeries& s);

struct GronwallVerdict {
    double spread = 0;
    bool pass = false;
};

// Passes when the calibrated constants vary by less than max_spread.
GronwallVerdict gronwall_verdict(const std::vector<double>& c_hats, double max_spread = 2.0);

struct TimeInterval {
    double a = 0;
    double b = 0;
    double norm = 0;
};

// Greedy maximal intervals with ||F||_{L^q_t L^r_x} <= eta on sample boundaries, from the profile
// ||F(t)||_{L^r}. A single step whose own norm exceeds eta becomes its own interval.
std::vector<TimeInterval> partition_by_strichartz(const std::vector<double>& t, const std::vector<double>& lr,
                                                  double q, double eta);

} // namespace kglab
