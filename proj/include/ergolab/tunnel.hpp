#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ergolab/landscape.hpp"
#include "ergolab/model.hpp"

namespace ergolab {

/// Continuous-time birth-death chain over the deep wells of a landscape:
/// the small-noise limit of the diffusion watched on the metastable time
/// scale. Rates are expressed in that rescaled time.
struct TunnelChain {
    std::vector<double> states;          // deep-well minima, ascending
    std::vector<std::vector<double>> p;  // embedded jump probabilities, rows sum to 1
    std::vector<double> lambda;          // per-state total exit rates
    std::vector<std::vector<double>> Q;  // rate matrix, row sums 0
    std::vector<double> mu;              // invariant law, sums to 1
    double C = 0.0;                      // curvature normalizer it was built from

    int size() const { return int(states.size()); }

    // Asserts the structural invariants: Q row sums 0, embedded rows sum to 1,
    // mu Q = 0 and sum mu = 1 (residual <= 1e-12), detailed balance.
    void validate() const;
};

/// Probability of leaving well `well` (index into d.minima) through each of
/// its two saddles, by quadrature of the exact scale-function ratio
///   p_right = int_{y_l}^{x_m} e^{2V/eps^2} / int_{y_l}^{y_r} e^{2V/eps^2}.
/// The running maximum of V is subtracted before exponentiation so the ratio
/// stays finite for eps well below the barrier scale. Boundary wells have a
/// single exit and return (0,1) or (1,0) exactly.
std::pair<double, double> exit_prob_exact(const PotentialView& V, double eps, int well,
                                          const WellDecomposition& d, int n_nodes = 4001);

/// Small-eps limit of exit_prob_exact: the saddle with the flatter crest
/// carries more scale-function mass, so its side wins proportionally,
///   p_right = sqrt(|V''(y_r)|) / (sqrt(|V''(y_l)|) + sqrt(|V''(y_r)|)).
/// Boundary wells return (0,1)/(1,0).
std::pair<double, double> exit_prob_asymptotic(const WellDecomposition& d, int well);

/// Assembles the limit chain on the deep wells: mu from the curvature
/// weights of `laplace`, off-diagonal rates
///   Q(i, i+-1) = 1 / (C mu(i) sqrt(|V''(y_sep)|))
/// with y_sep the separator between the two wells, diagonal closing each row
/// to 0. A single deep well yields the trivial chain Q = [0].
TunnelChain build_rate_matrix(const WellDecomposition& d, const LaplaceData& laplace);

/// Invariant law of a birth-death chain by the product formula
///   mu(i+1)/mu(i) = Q(i,i+1)/Q(i+1,i).
/// Throws DataError when an interior rate vanishes (reducible chain).
std::vector<double> chain_invariant(const TunnelChain& chain);

/// Piecewise-constant trajectory of the chain: state[k] is entered at t[k],
/// t[0] = 0, and the last state holds until T.
struct ChainPath {
    std::vector<double> t;
    std::vector<int> state;
    double T = 0.0;

    int jumps() const { return int(t.size()) - 1; }
    // Fraction of [0, T] spent in each state.
    std::vector<double> occupation(int n_states) const;
};

/// Simulates the chain from state 0: exponential holding times with rate
/// lambda(i), jumps drawn from the embedded probabilities. Deterministic
/// given the seed.
ChainPath simulate_chain(const TunnelChain& chain, double T, uint64_t seed);

/// Ergodic value carried by the chain: rho = sum_i rbar(x_i, u0(x_i)) mu(i),
/// where rbar averages the running cost over the mixture u0 places at the
/// grid node governing x_i.
double ergodic_value_representation(const RunningCost& cost, const ControlLaw& u0,
                                    const TunnelChain& chain);

}  // namespace ergolab
