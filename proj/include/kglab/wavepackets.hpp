#pragma once

#include <cstdint>
#include <vector>

#include "kglab/cones.hpp"
#include "kglab/fit.hpp"
#include "kglab/randomization.hpp"

namespace kglab {

// W = P~_k(phi_l f_{k,t0}) with f_{k,t0} = e^{i t0 <D>} sum_l Y_l f_{k,l},
// f_{k,l} = 1/2 (P_k(phi_l f) - i <D>^{-1} P_k(phi_l g)).
struct WavePacket {
    IVec k;
    IVec l;
    double t0 = 0;
    SpectralField w;
    double norm = 0;
    std::vector<double> velocity;  // k / <k>
};

// P~_k(phi_l source) for a physical source field f_{k,t0}.
SpectralField wave_packet_field(const ComplexField& source, const IVec& k, const IVec& l);

struct PacketSet {
    TorusGrid grid;
    double t0 = 0;
    std::vector<WavePacket> packets;
};

// e^{i t0 <D>} 1/2 (P_k(Y f) - i <D>^{-1} P_k(Y g)) with Y = sum_l Y_l phi_l.
SpectralField packet_source(const RealField& f, const RealField& g, const RandomSeedPlan& plan, const IVec& k,
                            double t0);

struct PacketOptions {
    // Spatial cells to build; empty means every cell of the torus.
    std::vector<IVec> cells;
    // Packets whose bound ||phi_l f_{k,t0}||_2 falls below rel_floor * max bound are not built.
    double rel_floor = 0;
    // false keeps only the norms; fields can be rebuilt with wave_packet_field
    bool keep_fields = true;
};

// Requires |k|_inf + 2 below Nyquist for every k.
PacketSet build_wave_packets(const RealField& f, const RealField& g, const RandomSeedPlan& plan,
                             const std::vector<IVec>& ks, double t0, const PacketOptions& opt = {});

// {t0 <= t <= t0 + N, |x - (l - (t - t0) k/<k>)| <= N^{2 delta}}.
struct Tube {
    IVec k;
    IVec l;
    double t0 = 0;
    double N = 1;
    double radius = 1;
    std::vector<double> velocity;

    std::vector<double> center(double t) const;
    bool contains(double t, const double* x) const;
};

Tube make_tube(const IVec& k, const IVec& l, double t0, double N, double delta);

// Doubled cube 2Q: [c_t - s, c_t + s] x prod [c_a - s, c_a + s] for a lattice cube of side s centred at c.
bool tube_meets_cube(const Tube& T, const std::vector<double>& centre, double side);

struct AmplitudeClass {
    int m = 0;
    std::vector<std::size_t> members;  // packet indices
    long mu = 1;                        // ceil(N^{(d-6)/4} #A_m)
};

// Dyadic binning of the packets with |l - x0| <= C N and nonzero norm.
std::vector<AmplitudeClass> bin_amplitudes(const PacketSet& ps, const std::vector<double>& x0, double N,
                                           double C = 4.0);
int dyadic_exponent(double norm);

// Cubes of side N^delta centred on N^delta Z^{d+1}, covering [t0, t0+N] x {|x - x0|_inf <= extent}.
struct CubeLattice {
    double t0 = 0;
    double N = 1;
    std::vector<double> x0;
    double side = 1;
    double extent = 1;

    std::vector<int> lo() const;
    std::vector<int> hi() const;
    std::vector<double> centre(const std::vector<int>& j) const;
    std::size_t count() const;
};

CubeLattice make_cube_lattice(double t0, double N, const std::vector<double>& x0, double delta, double C = 4.0);

struct Bush {
    std::vector<int> anchor;          // lattice index of Q
    std::vector<std::size_t> members; // indices into the tube list
};

struct BushDecomposition {
    long mu = 1;
    std::vector<Bush> bushes;
    std::vector<std::size_t> remainder;
};

// Greedy extraction over lattice cubes in lexicographic order.
BushDecomposition greedy_bush_decomposition(const std::vector<Tube>& tubes, long mu, const CubeLattice& lat);

struct BushAudit {
    bool partition = false;
    bool sizes = false;
    bool anchors = false;
    bool remainder = false;
    long max_remainder_count = 0;
    std::size_t cubes_checked = 0;
    bool ok() const { return partition && sizes && anchors && remainder; }
};

// Re-checks the four invariants by enumerating every lattice cube; uses its own incidence test.
BushAudit verify_bush_decomposition(const std::vector<Tube>& tubes, const BushDecomposition& dec,
                                    const CubeLattice& lat);

struct OffcoreRow {
    double separation = 0;
    double amplitude = 0;  // sup over the cone / ||f_k||_2
};

struct OffcoreResult {
    std::vector<OffcoreRow> rows;
    RegressionResult fit;
    std::vector<std::string> flags;
};

// sup over cone grid points of |e^{i(t-t0)<D>} P~_k(phi_l f_k)| with l = x0 + s e_1.
// window_scale rescales the spatial window to phi((x - l)/window_scale).
OffcoreResult measure_offcore_decay(const RealField& f, const IVec& k, const std::vector<double>& separations,
                                    const Cone& cone, double window_scale = 1.0, double time_step = 0.5);

struct TrilinearResult {
    double integral = 0;
    double u1_l2 = 0;    // ||u1||_{L^inf L^2(K)}
    double u2_l2 = 0;    // ||u2||_{L^inf L^2(K)}
    double u2_lq = 0;    // ||u2||_{L^inf L^{2 d_f/(d_f-2)}(K)}
    double force = 0;    // local_force with thickness N^{5 delta}
    double d_f = 0;      // dimension with p = (d_f+2)/(d_f-2)
    double bound = 0;    // N^{-s+(d_f+2)/8+2 d_f delta} u1 u2^{(d_f-4)/2} (u2q^{...} + force^{(6-d_f)/4})
    double c_hat = 0;    // integral / bound
};

// F is sampled at the trajectory times; integrand |F| |u1| |u2|^{p-1} over the cone.
TrilinearResult trilinear_cone_integral(const std::vector<RealField>& F, const Trajectory& u1, const Trajectory& u2,
                                        const Cone& cone, double s, double delta);
double critical_dimension(double p);

struct BushMonteCarloOptions {
    int draws = 500;
    double delta = 0.01;
    double C = 4.0;
    double L = 32.0;
    int bumps = 3;
    double time_step = 1.0;
    double rel_floor = 1e-4;
    std::uint64_t seed = 1;
    Family family = Family::rademacher;
    bool force_unit = false;
};

struct BushScaleRow {
    int N = 0;
    int m = 0;
    long mu = 0;
    std::size_t packets = 0;
    std::size_t bush_size = 0;
    std::size_t bush_count = 0;
    std::size_t remainder_size = 0;
    std::vector<double> b;        // 2^{-m} #B^{-1/2} ||sum X_k e^{i(t-t0)<D>} W||_{L^inf(K)}
    std::vector<double> dstat;    // same for the remainder with mu^{-1/2}
    std::vector<double> offtube;  // sup off the member tubes / (2^m #B)
    double psi_b = 0;
    double psi_d = 0;
    double offtube_mean = 0;
    TailStats tail_b;
    int skipped = 0;
    BushDecomposition decomposition;  // of the chosen class; indices into that class's members
    BushAudit audit;
};

struct BushMonteCarloResult {
    std::vector<BushScaleRow> rows;
    double c_fit = 0;             // one constant in psi_b <= C N^{d delta}
    double growth_slope = 0;      // fitted log-log slope of psi_b in N
    double offtube_slope = 0;
    std::vector<std::string> flags;
};

// sup_{p in {1,2,4,8}} p^{-1/2} ||X||_p
double psi_estimate(const std::vector<double>& samples);

BushMonteCarloResult montecarlo_bush_supnorm(const std::vector<int>& Ns, const BushMonteCarloOptions& opt = {});

} // namespace kglab
