#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/landscape.hpp"
#include "ergolab/model.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/tunnel.hpp"

namespace ergolab {

/// Outcome of one quantitative check. Every check is a one-sided comparison
/// of a measured quantity against a bound, with the slack actually granted
/// stored next to it, so a report line can be audited without rerunning.
struct VerificationReport {
    std::string check;      // machine name, stable across runs
    std::string claim;      // the inequality or limit being tested, in words
    double measured = 0.0;  // quantity produced by simulation or quadrature
    double bound = 0.0;     // value it is held against
    double tolerance = 0.0; // extra slack granted on top of the bound
    bool pass = false;
    double runtime_s = 0.0;
    uint64_t seed = 0;      // seed that reproduces the measurement bit-exactly
    std::string detail;     // free-form numbers for the summary table
};

/// Capped modulus h_R(s) = lip * min(|s|, R): linear near the origin, flat
/// beyond the cap. Used as the integrand weight in the two-well error bound.
struct CappedLipschitz {
    double R = 1.0;
    double lip = 0.0;

    double operator()(double s) const { return lip * std::min(std::abs(s), R); }
};

/// Second-moment ceiling for the dissipative comparison pair at time t:
///   eps^2 (1 - e^{-(2 - d^2 L^2) t}) a_sum / (2 - d^2 L^2).
/// Requires d^2 L^2 < 2; a_sum is the squared additive perturbation size.
double dissipativity_bound(double d, double L, double eps, double t, double a_sum);

/// Coupled second-moment growth: runs X^eps and X on shared increments under
/// a prescribed bounded control and checks E|X^eps - X|^2 at every recorded
/// time against eps^2 (e^{2Kt} - 1) / (2K) (eps^2 t when K = 0), with
/// three-standard-error slack. K is taken from the drift spec and cross-checked
/// against an empirical one-sided Lipschitz estimate; an understated K throws
/// ConfigError. One report per ladder entry; eps = 0 must give a bit-exact
/// zero difference.
std::vector<VerificationReport> verify_moment_bound(const DriftSpec& drift,
                                                    const std::vector<double>& eps_ladder,
                                                    const SimConfig& cfg);

/// Pathwise envelope ordering: Y_1 <= X^eps - X <= Y_2 step by step, with
/// ordering tolerance max(10 sqrt(dt) eps, 1e-12). One-signed envelopes only
/// order one sign of the separation, so the perturbed system starts one unit
/// above the limit system. The envelope precondition is validated on the
/// visited range first; a violated precondition is reported as a failure
/// rather than thrown. Identical envelope polynomials are flagged non-strict
/// in the detail and checked with equality allowed.
VerificationReport verify_comparison(const BoundingFields& bounds, const DriftSpec& drift,
                                     const DiffusionSpec& sigma, double eps,
                                     const SimConfig& cfg);

/// Flat-landscape value error: for contractive drift (K < 0), the ergodic
/// value at noise eps minus the zero-noise value of the same policy is at
/// most Lip(r) eps / sqrt(2|K|). The zero-noise value is measured by running
/// the noiseless flow under the eps-optimal feedback; the Lipschitz constant
/// of r is taken over the region the flow actually visits. One report per
/// ladder entry plus a trend report (gaps shrink as eps does).
std::vector<VerificationReport> verify_flat_error(const DriftSpec& drift, const RunningCost& cost,
                                                  const ControlSet& U,
                                                  const std::vector<double>& grid,
                                                  const std::vector<double>& eps_ladder,
                                                  const SimConfig& cfg);

/// Dissipative second-moment ceiling: checks the strict drift condition
/// b_i(s) s < -s^2 on sampled separations and d^2 L^2 < 2 (d scales only the
/// diffusion-increment term), then runs the comparison pair from the origin
/// and holds the horizon second moment to dissipativity_bound with
/// three-standard-error slack. A violated hypothesis is reported, and the
/// moment check skipped. The simulated pair carries the additive perturbation
/// only; the bound keeps the configured L, which can only enlarge it.
std::vector<VerificationReport> verify_dissipativity(const BoundingFields& bounds, double d,
                                                     double L, double eps, const SimConfig& cfg);

/// Mean-exit-time exponent per deep well: eps^2 log of the measured mean exit
/// time, held within 30% of the well's metastability scale 2 lambda_i at the
/// smallest eps and required to increase toward it along the ladder. A
/// companion report holds the same measurement to twice the full barrier
/// height 2(V(saddle) - V(min)), the Gibbs depth scale. Wells whose exits all
/// censor are reported infeasible; a single-well landscape reports a skip.
std::vector<VerificationReport> verify_exit_law(const Potential1D& V,
                                                const WellDecomposition& wells,
                                                const std::vector<double>& eps_ladder,
                                                const SimConfig& cfg);

/// Exit-side frequencies from an interior well: per ladder entry the observed
/// right-exit fraction is held within three binomial standard errors of the
/// exact scale-function probability, and the quadrature gap to the curvature
/// limit must shrink as eps does.
std::vector<VerificationReport> verify_exit_location(const Potential1D& V,
                                                     const WellDecomposition& wells, int well,
                                                     const std::vector<double>& eps_ladder,
                                                     const SimConfig& cfg);

/// Long-run occupation against the chain invariant law (L1 within 0.1,
/// trajectories started in proportion to the invariant masses) and measured
/// holding times per deep well against the chain's rescaled rates (factor-two
/// band, censoring-robust exposure-over-events estimator). A single-well
/// landscape reports a trivial pass.
std::vector<VerificationReport> verify_chain_limit(const Potential1D& V,
                                                   const WellDecomposition& wells, double eps,
                                                   const SimConfig& cfg);

/// Value representation and selection. (a) The simulated uncontrolled ergodic
/// cost at noise eps against the chain representation sum_i rbar(x_i) mu_i,
/// within 10%. (b) Start dependence: with the noise off, per-start values
/// must spread beyond five standard errors; with noise on, per-start values
/// must agree within three. Start points are the deep minima.
std::vector<VerificationReport> verify_value_and_selection(const Potential1D& V,
                                                           const WellDecomposition& wells,
                                                           const RunningCost& cost, double eps,
                                                           const SimConfig& cfg_value,
                                                           const SimConfig& cfg_select);

/// Nondegenerate-vs-degenerate value gap for constant sigma: per ladder entry
/// |rho*_{sqrt(sigma^2+eps^2)} - rho*_sigma| is held to the two-part bound
///   2 int h_R(|x|) exp(-sum_i V_i(0,x)/eps^2) dx
///   + 4 ||r||_inf sum_i exp(-inf_{|x|>=R} V_i(0,x)/eps^2),
/// with V_i the quasi-potential of envelope field b_i. The degenerate value
/// uses the sigma-only solve when sigma > 0 and the deep-well floor of r
/// otherwise; the route taken is recorded in the detail.
std::vector<VerificationReport> verify_constant_sigma_gap(const DriftSpec& drift,
                                                          const DiffusionSpec& sigma,
                                                          const RunningCost& cost,
                                                          const BoundingFields& bounds,
                                                          const ControlSet& U,
                                                          const std::vector<double>& grid,
                                                          const std::vector<double>& eps_ladder,
                                                          double cap_R = 1.0);

}  // namespace ergolab
