#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ergolab/common.hpp"

namespace ergolab {

// Callable view of a scalar potential on a working interval.
struct PotentialView {
    std::function<double(double)> v, dv, ddv;
    double x_lo = 0.0, x_hi = 0.0;
};

/// Confining scalar potential on [x_lo, x_hi]: either a single polynomial
/// (ascending coefficients, degree <= 12) or a piecewise polynomial with
/// breakpoints. Pieces must join continuously; the well/saddle analysis
/// assumes V' has finitely many sign changes on the interval.
struct Potential1D {
    struct Piece {
        double lo;                    // valid on [lo, next piece's lo)
        std::vector<double> coeffs;   // global coordinates, ascending powers
    };

    std::vector<double> coeffs;       // used when pieces is empty
    std::vector<Piece> pieces;
    double beta = 1.0;                // growth exponent, recorded
    double x_lo = -1.0, x_hi = 1.0;

    double value(double x) const;
    double dvalue(double x) const;
    double ddvalue(double x) const;
    PotentialView view() const;

    // Checks degree, growth direction at the ends, derivative consistency by
    // central differences at interior sample points (1e-6 relative), and that
    // the endpoint values dominate every interior critical value.
    void validate() const;

  private:
    const std::vector<double>& piece_at(double x) const;
};

/// Finite control set: n equally spaced points on [u_min, u_max].
struct ControlSet {
    double u_min = 0.0, u_max = 0.0;
    std::vector<double> points;

    static ControlSet make(double u_min, double u_max, int n);
    int nearest(double u) const;
    int size() const { return int(points.size()); }
};

/// Markov control law on a state grid: per-node probability weights over the
/// control set. A precise law has exactly one unit weight per node; a relaxed
/// law mixes. Weights at every node sum to 1 within 1e-12.
struct ControlLaw {
    ControlSet set;
    std::vector<double> grid;                   // state nodes, uniform ascending
    std::vector<std::vector<double>> weights;   // [node][control point]
    bool relaxed = false;

    void validate() const;
    void finalize();                            // validate + rebuild barycenter cache

    int nearest_node(double x) const;
    // Mean control value at the node governing x.
    double barycenter(double x) const { return bary_[nearest_node(x)]; }
    double barycenter_at_node(int i) const { return bary_[i]; }
    const std::vector<double>& barycenters() const { return bary_; }

    static ControlLaw constant(const ControlSet& set, std::vector<double> grid, double u0);
    // Point mass at the control point nearest f(x) per node.
    static ControlLaw from_function(const ControlSet& set, std::vector<double> grid,
                                    const std::function<double(double)>& f);
    // Relaxed two-point mixture whose barycenter equals clamp(f(x)) exactly.
    static ControlLaw from_values_exact(const ControlSet& set, std::vector<double> grid,
                                        const std::function<double(double)>& f);

  private:
    std::vector<double> bary_;
};

/// Controlled drift m(x,u). The additive forms keep the fast path and make the
/// relaxed drift equal the drift at the barycentric control.
struct DriftSpec {
    enum class Kind { GradientFlow, PolyAffine, Custom };

    Kind kind = Kind::PolyAffine;
    Potential1D potential;             // GradientFlow: m = -V'(x) + u
    std::vector<double> base_coeffs;   // PolyAffine:   m = p(x) + u
    std::function<double(double, double)> custom;  // Custom: m = custom(x,u)
    bool additive_control = true;      // false only possible for Custom
    double K = 0.0;                    // one-sided Lipschitz constant, signed

    double m(double x, double u) const;
    double base(double x) const { return m(x, 0.0); }
};

/// Uncontrolled diffusion coefficient sigma(x) (possibly identically zero) with
/// its recorded Lipschitz constant.
struct DiffusionSpec {
    std::vector<double> coeffs{0.0};   // sigma(x) as a polynomial
    double lip = 0.0;

    double sigma(double x) const { return polyval(coeffs, x); }
    bool is_constant() const { return coeffs.size() <= 1; }
    // Nondegenerate coefficient with sigma_eps^2 = sigma^2 + eps^2.
    double perturbed_sqrt(double x, double eps) const;
    // Additive perturbation sigma(x) + eps*sigma_hat0 used by the envelope bounds.
    double perturbed_additive(double x, double eps, double sigma_hat0) const;
};

/// Running cost r(x,u) = px(x - x_center) + pu(u), with bounds recorded over
/// the working box for use in error estimates.
struct RunningCost {
    std::vector<double> x_coeffs{0.0};
    double x_center = 0.0;
    std::vector<double> u_coeffs{0.0};
    double lip_x = 0.0;     // max |d r/d x| over the working box
    double sup_norm = 0.0;  // max |r| over the working box

    double r(double x, double u) const {
        return polyval(x_coeffs, x - x_center) + polyval(u_coeffs, u);
    }
    void record_bounds(double x_lo, double x_hi, const ControlSet& set, int nx = 2001);
};

/// One-dimensional envelope fields b1, b2 for the drift increment
/// m(x,u) - m(y,u), plus the constant diffusion-perturbation direction.
/// For linear fields the strict ordering b1(s) < gap(s) <= b2(s) can only hold
/// on one sign of the separation s, so validation takes the range to check.
struct BoundingFields {
    std::vector<double> b1{0.0}, b2{0.0};  // polynomials in s = x - y
    double sigma_hat0 = 1.0;

    double b1_at(double s) const { return polyval(b1, s); }
    double b2_at(double s) const { return polyval(b2, s); }
    // Checks b1(x-y) < m(x,u)-m(y,u) <= b2(x-y) on sampled triples with
    // separation in [s_lo, s_hi]; throws ParamError when violated.
    void validate_envelope(const DriftSpec& drift, const ControlSet& set,
                           double x_lo, double x_hi, double s_lo, double s_hi,
                           int samples = 400) const;
};

/// Tabulated potential (typically an effective potential V - int u). Value is
/// interpolated cubically from (v, dv) pairs, the derivative linearly from dv,
/// and the second derivative from the finite-difference column.
struct PotentialTable {
    std::vector<double> x, v, dv, ddv;

    double value(double q) const;
    double dvalue(double q) const;
    double ddvalue(double q) const;
    PotentialView view() const;

  private:
    int cell(double q) const;
};

// ---- operations -------------------------------------------------------------

/// Relaxed drift sum_k w_k m(x, u_k) for an explicit probability vector w
/// over the control set. Throws ConfigError on a size mismatch or an invalid
/// weight vector.
double relaxed_drift(const DriftSpec& drift, double x, const std::vector<double>& w,
                     const ControlSet& set);

/// Same under the law's weights at x's node.
double relaxed_drift(const DriftSpec& drift, const ControlLaw& law, double x);

/// d x d nondegenerate perturbation: returns the symmetric square root of
/// sigma sigma^T + eps^2 I.
std::vector<std::vector<double>> build_perturbation(const std::vector<std::vector<double>>& sigma,
                                                    double eps);

/// Effective potential table V_eff(x) = V(x) - int_0^x u(y) dy on the law's
/// grid (composite trapezoid for the integral, anchored at the node nearest 0;
/// exact when u vanishes). dv holds V'(x) - u(x) at the nodes, ddv a central
/// finite difference of dv. Relaxed laws are reduced to their barycenter:
/// with control entering the drift additively, only the mean matters.
PotentialTable effective_potential(const Potential1D& V, const ControlLaw& law);

/// Gaussian mollification of the law's weight channels: kernel N(0, delta)
/// truncated at +-6 sqrt(delta) and renormalized. Output is relaxed.
ControlLaw mollify_gaussian(const ControlLaw& law, double delta);

/// Forward moving average u_delta(x) = (1/delta) int_x^{x+delta} u(y) dy of the
/// barycentric values, extending the last value past the grid edge. The result
/// is a relaxed law whose node barycenters match the averages exactly.
ControlLaw moving_average(const ControlLaw& law, double delta);

/// Empirical one-sided Lipschitz constant of the controlled system:
/// max over sampled (x,y,u) of [ (m(x,u)-m(y,u))(x-y) + 1/2 (sigma(x)-sigma(y))^2 ] / (x-y)^2.
/// Samples independent pairs plus nearby pairs to capture the derivative
/// supremum; requires at least 100 samples.
double one_sided_lipschitz_estimate(const DriftSpec& drift, const DiffusionSpec& diffusion,
                                    const ControlSet& set, double x_lo, double x_hi,
                                    int n_samples, uint64_t seed);

}  // namespace ergolab
