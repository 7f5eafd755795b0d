#pragma once

#include <vector>

#include "ergolab/model.hpp"

namespace ergolab {

struct HjbOptions {
    int max_sweeps = 100;
    double residual_tol = 1e-8;
    int normalize_node = -1;  // bias anchor; -1 means the grid midpoint
};

/// Converged ergodic value, bias, and optimal feedback on a uniform grid.
struct HjbSolution {
    std::vector<double> x;
    std::vector<double> phi;  // bias, zero at the anchor node
    double rho = 0.0;
    ControlLaw policy;  // precise law, one control point per node
    std::vector<double> rho_log;       // value after each policy evaluation
    std::vector<double> residual_log;  // max node residual after each evaluation
    int sweeps = 0;
    bool converged = false;
    double residual = 0.0;
};

/// Policy iteration for the controlled ergodic problem on a truncated
/// interval: policy evaluation solves the linear system
///   eps^2/2 D2 phi + m(x, u(x)) D1 phi + r(x, u(x)) = rho,  phi(x0) = 0
/// with first derivatives upwinded against the drift and zero-flux (mirror)
/// boundaries; policy improvement minimizes the discrete Hamiltonian per
/// node over the finite control set. Stops at a policy fixed point, or
/// returns the best iterate with `converged` unset after max_sweeps.
HjbSolution solve_ergodic_hjb(const DriftSpec& drift, double eps, const RunningCost& cost,
                              const std::vector<double>& grid, const ControlSet& U,
                              const HjbOptions& opts = {});

/// Per-node argmin over U of m(x,u) D1 phi + r(x,u) with the same upwind
/// stencil as the solver. Ties break toward the smallest |u|, then the
/// smallest u. Returns a precise law on the grid.
ControlLaw minimizing_selector(const std::vector<double>& grid, const std::vector<double>& phi,
                               const DriftSpec& drift, const RunningCost& cost,
                               const ControlSet& U);

}  // namespace ergolab
