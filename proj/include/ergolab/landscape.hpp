#pragma once

#include <functional>
#include <vector>

#include "ergolab/histogram.hpp"
#include "ergolab/model.hpp"

namespace ergolab {

/// Well structure of a confining 1-d potential: interlaced minima/maxima with
/// curvatures, per-well depths and metastability scales, and the deep-well
/// coarse decomposition.
struct WellDecomposition {
    std::vector<double> minima;       // x_1 < ... < x_N
    std::vector<double> maxima;       // y_1 < ... < y_{N-1}, interlaced
    std::vector<double> min_value;    // V at minima
    std::vector<double> max_value;    // V at maxima (saddle heights)
    std::vector<double> min_curv;     // V'' at minima, all > 0
    std::vector<double> max_curv;     // V'' at maxima, all < 0

    // Filled by depths_and_wells. Boundary wells have one adjacent saddle;
    // their missing side is +infinity.
    std::vector<double> depth_left;   // V(y_{i-1}) - V(x_i)
    std::vector<double> depth_right;  // V(y_i) - V(x_i)
    std::vector<double> lambda_i;     // half the smaller adjacent depth
    bool has_metastability = false;   // false for a single well

    // Filled by deep_wells.
    std::vector<int> deep;            // indices into minima, the argmax of lambda_i
    double lambda = 0.0;              // max_i lambda_i
    std::vector<double> separators;   // |deep|-1 saddle locations bounding the W_i

    int wells() const { return int(minima.size()); }
    // Index of the coarse well W_i containing q (cells cut at separators).
    int coarse_index(double q) const;
    // Index of the basin of attraction containing q (cells cut at maxima).
    int basin_index(double q) const;
    void check_interlacing() const;
};

/// Laplace-method constants of the Gibbs normalization at temperature eps.
struct LaplaceData {
    double eps = 0.0;
    double C = 0.0;          // sum over deep wells of 1/sqrt(V''(x_m))
    double partition = 0.0;  // asymptotic value of int exp(-2V/eps^2)
    std::vector<double> mass;  // per-deep-well invariant masses, sum exactly 1
};

/// Tabulated quasi-potential V(0, x) of the zero-noise-limit rate function.
struct QuasiPotentialCurve {
    std::vector<double> x;
    std::vector<double> v;
    double a_hat = 1.0;  // scalar diffusion normalizer

    double at(double q) const;  // linear interpolation
};

/// Locates critical points of V' by sign-change bracketing on a fine grid
/// (default 10^4 cells) refined by bisection to 1e-10, classified by the sign
/// of V''. Throws DataError on a degenerate point (|V''| < 1e-6), on a missing
/// minimum, or when the alternation pattern breaks.
WellDecomposition find_critical_points(const PotentialView& V, double lo, double hi,
                                       int grid_n = 10000);

/// Fills depths and per-well scales lambda_i = min(adjacent depths)/2.
/// A single well has no saddles and is flagged non-metastable.
void depths_and_wells(WellDecomposition& d);

/// Fills the deep-well set S = argmax lambda_i, lambda = max, and the coarse
/// separators: between consecutive deep wells the highest saddle wins, ties
/// resolved to the leftmost.
void deep_wells(WellDecomposition& d);

/// Convenience: the full pipeline on one potential.
WellDecomposition analyze_landscape(const PotentialView& V, double lo, double hi,
                                    int grid_n = 10000);

/// Laplace asymptotics of int exp(-2V/eps^2) dx: each deep minimum contributes
/// sqrt(pi)*eps*exp(-2V(x_m)/eps^2)/sqrt(V''(x_m)); per-well masses follow the
/// curvature-only weights 1/(C*sqrt(V''(x_m))).
LaplaceData laplace_partition(const WellDecomposition& d, double eps);

/// Numerically stable Gibbs quadrature of exp(-2V/eps^2) on [lo, hi]: the
/// fine-grid minimum of V is subtracted before exponentiation, per-bin masses
/// integrated by composite Simpson, and the partition value re-inflated.
struct GibbsResult {
    OccupationHistogram hist;
    double partition = 0.0;
    double v_min = 0.0;
};
GibbsResult gibbs_quadrature(const PotentialView& V, double eps, double lo, double hi,
                             int bins);

/// 1-d quasi-potential V(0,x) = (2/a_hat) int_0^x -b(s) ds on the grid.
/// Requires b(0)=0 and s*b(s) < 0 away from 0 (attraction to the origin);
/// otherwise the closed form is invalid and a ParamError is thrown.
QuasiPotentialCurve quasi_potential_1d(const std::function<double(double)>& b, double a_hat,
                                       const std::vector<double>& grid);

/// Brute-force action oracle: minimizes the discretized rate functional
///   sum dt * (v_k - b(phi_mid))^2 / (2 a_hat),   v_k = (phi_{k+1}-phi_k)/dt
/// over piecewise-linear paths 0 -> x_target by coordinate descent (Newton
/// steps per node) with random restarts, node-doubling refinement, and a
/// T-ladder. Deliberately independent of the closed form above.
struct ActionResult {
    double action = 0.0;
    double dispersion = 0.0;  // spread across restarts, a quality signal
    double best_T = 0.0;
};
ActionResult action_oracle(const std::function<double(double)>& b, double a_hat,
                           double x_target, double T_max = 8.0, int n_steps = 200,
                           uint64_t seed = 1234);

}  // namespace ergolab
