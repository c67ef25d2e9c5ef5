#pragma once

#include <vector>

#include "kglab/fit.hpp"
#include "kglab/grid.hpp"

namespace kglab {

using IVec = std::vector<int>;

// Smooth step: 0 for y <= 0, 1 for y >= 1, built from the bump exp(-1/(1-u^2)).
double smoothstep(double y);
// Mother window h: 1 on [-1/4,1/4], 0 outside [-3/4,3/4].
double mother_window(double x);
// phi(x) = h(x) / sum_j h(x - j); sums to one over integer translates.
double phi_1d(double x);
// chi_0(r): 1 for r <= 1, 0 for r >= 2.
double chi0(double r);
// psi_N(r) = chi_0(r/N) - chi_0(2r/N) for N >= 2, psi_1 = chi_0.
double dyadic_psi(double r, int N);

// Tensor window phi(xi - k) evaluated at a point.
double unit_partition(const double* xi, const IVec& k);

// Spectral multiplier phi(xi - k) on the grid (FFT order). halfwidth 1 gives the
// enlarged projector P~_k = sum_{|k~-k|_inf <= 1} P_k~.
std::vector<double> cell_multiplier(const TorusGrid& g, const IVec& k, int halfwidth = 0);
// Physical window phi(x - l) with periodic wrap.
std::vector<double> spatial_window_table(const TorusGrid& g, const IVec& l);
std::vector<double> dyadic_multiplier(const TorusGrid& g, int N);

SpectralField project_cell(const SpectralField& s, const IVec& k, int halfwidth = 0);
ComplexField project_frequency_cell(const RealField& f, const IVec& k);
RealField spatial_window(const RealField& f, const IVec& l);
ComplexField spatial_window(const ComplexField& f, const IVec& l);

// Integer spatial cells of the torus (requires integer L).
std::vector<IVec> spatial_cells(const TorusGrid& g);
// Frequency cells with |k|_inf <= K; K + 1 must lie below Nyquist.
std::vector<IVec> frequency_cells(const TorusGrid& g, int K);
// Largest K with K + 1 below Nyquist.
int max_resolved_cell(const TorusGrid& g);

struct PhaseSpaceAtom {
    IVec k;
    IVec l;
    ComplexField payload;
};
PhaseSpaceAtom make_atom(const RealField& f, const IVec& k, const IVec& l);

// || <k>^s || P_k(phi_l f) ||_{L^r} ||_{l^q_k l^p_l}, cells |k|_inf <= K (K < 0: all resolved).
double modulation_norm(const RealField& f, double s, double p, double q, double r, int K = -1);

enum class MismatchKind { spatial, frequency };

struct DecayTable {
    std::vector<double> separation;
    std::vector<double> ratio;
    RegressionResult fit;
};

// Operator-norm estimate of h_l P_k h_l' (spatial) or P_k h_l P_k' (frequency) as a
// function of the separation, by power iteration on T*T started at the probe.
// power_iters = 0 returns the plain probe ratio ||T f|| / ||f||.
DecayTable measure_mismatch_decay(MismatchKind kind, const std::vector<int>& separations, const RealField& probe,
                                  int power_iters = 40, double fit_lo = 2, double fit_hi = 8);

} // namespace kglab
