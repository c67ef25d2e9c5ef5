#pragma once

#include <string>
#include <vector>

#include "kglab/decomposition.hpp"
#include "kglab/fit.hpp"
#include "kglab/grid.hpp"

namespace kglab {

// <xi> = sqrt(1 + |xi|^2) per mode, FFT order.
std::vector<double> bracket_symbol(const TorusGrid& g);

// e^{sign i t <D>}.
struct HalfWaveFlow {
    TorusGrid grid;
    int sign = 1;
    std::vector<double> omega;

    HalfWaveFlow(const TorusGrid& g, int sign_);
    void apply(SpectralField& s, double t) const;
};

SpectralField evolve_half_wave(const SpectralField& s, double t, int sign = 1);
ComplexField evolve_half_wave(const ComplexField& f, double t, int sign = 1);
ComplexField evolve_half_wave(const RealField& f, double t, int sign = 1);

// K(t)(u0, u1) = (cos(t<D>)u0 + sin(t<D>)<D>^{-1} u1, d/dt of the same).
struct PairFlow {
    TorusGrid grid;
    std::vector<double> omega;

    explicit PairFlow(const TorusGrid& g);
    void apply(SpectralField& u, SpectralField& ut, double t) const;
    StatePair apply(const StatePair& s, double t) const;
};

StatePair evolve_pair(const StatePair& s, double t);
// ||<D>u||^2 + ||u_t||^2.
double linear_energy(const StatePair& s);

struct DecayOptions {
    double width = 0.5;
    // Explicit fit window; used when hi > lo.
    double fit_lo = 0;
    double fit_hi = 0;
    // Energy fraction allowed to travel faster than the speed, or lie outside the diameter, used by the wrap check.
    double tail_tol = 1e-4;
};

struct DecayResult {
    IVec k;
    double r = kInf;
    std::vector<double> t;
    std::vector<double> ratio;
    RegressionResult wave;
    RegressionResult kg;
    RegressionResult custom;
    double predicted_wave = 0;
    double predicted_kg = 0;
    // First t where the local log-slope passes the midpoint of the two predictions; NaN if never.
    double crossover = 0;
    double group_speed = 0;
    double support_diameter = 0;
    std::vector<std::string> flags;
};

// Ratio ||e^{it<D>} P_k g||_r / ||g||_{r'} for a modulated Gaussian g with ||g||_{r'} = 1.
// g is the baseband grid; the evolution runs in the frame moving with the group velocity of k,
// which leaves every L^r norm unchanged.
DecayResult measure_cell_decay(const TorusGrid& g, const IVec& k, double r, const std::vector<double>& ts,
                               const DecayOptions& opt = {});

enum class StrichartzBranch { admissible, sub_admissible };

StrichartzBranch classify_strichartz(double q, double r, int d);
double predicted_strichartz_exponent(double q, double r, int d);
std::string branch_name(StrichartzBranch b);

struct StrichartzOptions {
    std::vector<int> Ks{1, 2, 4, 8};
    // Horizon in units of 2pi<k> (admissible) or 2pi<k>^3 (sub-admissible); 0 picks 5 or 4.
    double horizon = 0;
    int time_samples = 120;
    double tail_tol = 1e-4;
    // Largest grid side allowed when sizing the baseband torus.
    int max_n = 4096;
};

struct StrichartzCell {
    int K = 0;
    double bracket = 0;
    double horizon = 0;
    TorusGrid grid;
    double norm = 0;
};

struct StrichartzResult {
    StrichartzBranch branch = StrichartzBranch::admissible;
    int d = 0;
    double q = 0;
    double r = 0;
    std::string probe;
    std::vector<StrichartzCell> cells;
    RegressionResult fit;
    double exponent = 0;
    double predicted = 0;
};

// Fits log ||e^{it<D>} P_k f||_{L^q_t L^r_x} against log <k> for k = (K,0,..), ||P_k f||_2 = 1.
// Admissible triples use an isotropic bump; sub-admissible ones a Knapp packet elongated
// transversally by <k>.
StrichartzResult measure_cell_strichartz(int d, double q, double r, const StrichartzOptions& opt = {});

struct TransferRow {
    int N = 0;
    double sup = 0;
    double lq = 0;
    double ratio = 0;
};

struct TransferResult {
    std::vector<TransferRow> rows;
    double spread = 0;
};

// ||e^{it<D>} P_N f||_{L^inf_t L^r} / (N^{1/q} ||e^{it<D>} P_N f||_{L^q_t L^r}) on [0, T].
TransferResult verify_infty_transfer(const RealField& f, const std::vector<int>& Ns, double q, double r,
                                     double T, int time_samples = 200);

} // namespace kglab
