#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kglab/decomposition.hpp"
#include "kglab/grid.hpp"

namespace kglab {

enum class Family { rademacher, gaussian, uniform_symmetric };

const char* family_name(Family f);
Family parse_family(const std::string& s);
// Upper bound on sup_p p^{-1/2} ||X||_p for the family.
double psi_norm_bound(Family f);

// Fixed 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t z);

struct RandomSeedPlan {
    std::uint64_t base_seed = 0;
    Family family = Family::rademacher;
    // Test hook: every draw returns +1.
    bool force_unit = false;

    // seed = H(base, tag, index) with H a chain of mix64 calls.
    std::uint64_t derive(char tag, const IVec& index) const;
    double draw(char tag, const IVec& index) const;
    // X_k; k and -k share a draw so randomized real data stay real.
    double draw_x(const IVec& k) const;
    double draw_y(const IVec& l) const;

    std::string to_json() const;
    static RandomSeedPlan from_json(const std::string& text);
};

double draw_from_seed(Family f, std::uint64_t seed);

// Multiplier sum_l Y_l phi_l(x) as a physical field.
RealField spatial_randomizer(const TorusGrid& g, const RandomSeedPlan& plan);
// Multiplier sum_{|k|_inf <= K} X_k phi(xi - k) in FFT order.
std::vector<double> frequency_randomizer(const TorusGrid& g, const RandomSeedPlan& plan, int K);

// f^w = sum_{|k|<=K} sum_l X_k P_k(Y_l phi_l f), same draws for g.
StatePair randomize_data(const RealField& f, const RealField& g, const RandomSeedPlan& plan, int K);
RealField randomize_field(const RealField& f, const RandomSeedPlan& plan, int K);
// sum_{|k|<=K} sum_l ||P_k(phi_l f)||_2^2
double atom_energy(const RealField& f, int K);

struct KhinchinRow {
    double p;
    double empirical;  // (E|sum a_j X_j|^p)^{1/p}
    double bound;      // sqrt(p) ||a||_2
    double ratio;
};
struct KhinchinTable {
    std::vector<KhinchinRow> rows;
    double c_hat = 0;
};
KhinchinTable verify_khinchin(Family f, const std::vector<double>& a, const std::vector<double>& ps, int draws,
                              std::uint64_t seed);
// E|g|^p)^{1/p} for a standard Gaussian.
double gaussian_abs_moment(double p);

struct MaxRow {
    int J;
    double empirical;  // E max_j |X_j|
    double bound;      // log <J>
    double ratio;
};
struct MaxTable {
    std::vector<MaxRow> rows;
    double spread = 0;  // max ratio / min ratio
};
MaxTable verify_max_inequality(Family f, const std::vector<int>& Js, int draws, std::uint64_t seed);
// E max_{j<=J} |g_j| by quadrature of 1 - erf(x/sqrt2)^J.
double gaussian_expected_abs_max(int J);

struct TailStats {
    double c_hat;        // fitted c in P(|X| > t) <= 2 exp(-c t^2); NaN when the tail is degenerate
    double psi;          // sup_{p in {1,2,4,8}} p^{-1/2} ||X||_p
    int tail_points = 0;
};
TailStats tail_statistics(const std::vector<double>& samples);

} // namespace kglab
