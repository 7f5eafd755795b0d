#include "ergolab/hjb.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace ergolab {

namespace {

void check_grid(const std::vector<double>& x) {
    require(int(x.size()) >= 201, "solver grid needs at least 201 nodes");
    double h = x[1] - x[0];
    require(h > 0.0, "solver grid must ascend");
    for (size_t i = 1; i < x.size(); ++i)
        require(std::fabs((x[i] - x[i - 1]) - h) <= 1e-9 * h, "solver grid must be uniform");
}

// Upwind Hamiltonian term m * D1(phi) at node i, with the mirror ghost
// folding the off-grid neighbor back inside at the interval ends.
double upwind_term(const std::vector<double>& phi, int i, double m, double h) {
    int n = int(phi.size());
    double fwd = (i + 1 < n ? phi[i + 1] : phi[n - 2]) - phi[i];
    double bwd = phi[i] - (i > 0 ? phi[i - 1] : phi[1]);
    double mp = std::max(m, 0.0), mm = std::max(-m, 0.0);
    return mp * fwd / h - mm * bwd / h;
}

// Argmin over the control set of the discrete Hamiltonian at node i.
// Values within a relative tie window count as equal, so round-off in phi
// cannot flip a genuinely tied choice between sweeps; ties resolve to the
// smallest |u|, then the smallest u.
int improve_node(const std::vector<double>& x, const std::vector<double>& phi, int i,
                 const DriftSpec& drift, const RunningCost& cost, const ControlSet& U,
                 double h) {
    int best = 0;
    double best_h = 0.0, best_u = 0.0;
    for (int c = 0; c < U.size(); ++c) {
        double u = U.points[c];
        double m = drift.m(x[i], u);
        double val = upwind_term(phi, i, m, h) + cost.r(x[i], u);
        if (c == 0) {
            best_h = val;
            best_u = u;
            continue;
        }
        double tie = 1e-9 * (1.0 + std::fabs(best_h));
        bool take = val < best_h - tie;
        if (!take && val <= best_h + tie &&
            (std::fabs(u) < std::fabs(best_u) ||
             (std::fabs(u) == std::fabs(best_u) && u < best_u)))
            take = true;
        if (take) {
            best = c;
            best_h = std::min(best_h, val);
            best_u = u;
        }
    }
    return best;
}

std::vector<int> improve(const std::vector<double>& x, const std::vector<double>& phi,
                         const DriftSpec& drift, const RunningCost& cost, const ControlSet& U,
                         double h) {
    std::vector<int> idx(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        idx[i] = improve_node(x, phi, int(i), drift, cost, U, h);
    return idx;
}

// Policy evaluation: the node equations plus the anchor row, solved as one
// bordered sparse system in (phi, rho).
void evaluate(const std::vector<double>& x, const std::vector<int>& idx, const DriftSpec& drift,
              double eps, const RunningCost& cost, const ControlSet& U, int anchor,
              std::vector<double>& phi, double& rho) {
    int n = int(x.size());
    double h = x[1] - x[0];
    double c2 = 0.5 * eps * eps / (h * h);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(n) * 4 + 2);
    Eigen::VectorXd rhs(n + 1);
    for (int i = 0; i < n; ++i) {
        double u = U.points[idx[i]];
        double m = drift.m(x[i], u);
        double mp = std::max(m, 0.0), mm = std::max(-m, 0.0);
        double lo = c2 + mm / h;
        double di = -2.0 * c2 - (mp + mm) / h;
        double hi = c2 + mp / h;
        if (i == 0) {
            hi += lo;
            lo = 0.0;
        }
        if (i == n - 1) {
            lo += hi;
            hi = 0.0;
        }
        if (i > 0 && lo != 0.0) trips.emplace_back(i, i - 1, lo);
        trips.emplace_back(i, i, di);
        if (i + 1 < n && hi != 0.0) trips.emplace_back(i, i + 1, hi);
        trips.emplace_back(i, n, -1.0);
        rhs[i] = -cost.r(x[i], u);
    }
    trips.emplace_back(n, anchor, 1.0);
    rhs[n] = 0.0;

    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
        throw DataError("policy evaluation system is singular (grid too coarse for this noise level?)");
    Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) throw DataError("policy evaluation produced non-finite values");

    phi.assign(sol.data(), sol.data() + n);
    rho = sol[n];
}

double max_residual(const std::vector<double>& x, const std::vector<double>& phi, double rho,
                    const std::vector<int>& idx, const DriftSpec& drift, double eps,
                    const RunningCost& cost, const ControlSet& U) {
    int n = int(x.size());
    double h = x[1] - x[0];
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = U.points[idx[i]];
        double m = drift.m(x[i], u);
        double left = i > 0 ? phi[i - 1] : phi[1];
        double right = i + 1 < n ? phi[i + 1] : phi[n - 2];
        double d2 = (left - 2.0 * phi[i] + right) / (h * h);
        double res = 0.5 * eps * eps * d2 + upwind_term(phi, i, m, h) + cost.r(x[i], u) - rho;
        worst = std::max(worst, std::fabs(res));
    }
    return worst;
}

ControlLaw law_from_indices(const std::vector<double>& x, const std::vector<int>& idx,
                            const ControlSet& U) {
    ControlLaw law;
    law.set = U;
    law.grid = x;
    law.relaxed = false;
    law.weights.assign(x.size(), std::vector<double>(U.size(), 0.0));
    for (size_t i = 0; i < x.size(); ++i) law.weights[i][idx[i]] = 1.0;
    law.finalize();
    return law;
}

}  // namespace

HjbSolution solve_ergodic_hjb(const DriftSpec& drift, double eps, const RunningCost& cost,
                              const std::vector<double>& grid, const ControlSet& U,
                              const HjbOptions& opts) {
    require(eps > 0.0, "ergodic solver needs a positive noise level");
    require(U.size() >= 1, "control set is empty");
    check_grid(grid);
    int n = int(grid.size());
    int anchor = opts.normalize_node < 0 ? n / 2 : opts.normalize_node;
    require(anchor >= 0 && anchor < n, "anchor node out of range");
    double h = grid[1] - grid[0];

    HjbSolution sol;
    sol.x = grid;

    std::vector<double> zero(grid.size(), 0.0);
    std::vector<int> idx = improve(grid, zero, drift, cost, U, h);
    std::vector<int> evaluated;
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        evaluate(grid, idx, drift, eps, cost, U, anchor, sol.phi, sol.rho);
        // The linear solve leaves round-off at the anchor; re-pin it, which
        // shifts phi by a constant and changes no difference quotient.
        double off = sol.phi[anchor];
        for (double& p : sol.phi) p -= off;
        sol.phi[anchor] = 0.0;
        evaluated = idx;
        sol.sweeps = sweep;
        sol.rho_log.push_back(sol.rho);
        sol.residual = max_residual(grid, sol.phi, sol.rho, idx, drift, eps, cost, U);
        sol.residual_log.push_back(sol.residual);
        std::vector<int> next = improve(grid, sol.phi, drift, cost, U, h);
        if (next == idx) {
            sol.converged = sol.residual <= opts.residual_tol;
            break;
        }
        idx = std::move(next);
    }
    sol.policy = law_from_indices(grid, evaluated, U);
    return sol;
}

ControlLaw minimizing_selector(const std::vector<double>& grid, const std::vector<double>& phi,
                               const DriftSpec& drift, const RunningCost& cost,
                               const ControlSet& U) {
    check_grid(grid);
    require(phi.size() == grid.size(), "bias and grid sizes differ");
    require(U.size() >= 1, "control set is empty");
    double h = grid[1] - grid[0];
    return law_from_indices(grid, improve(grid, phi, drift, cost, U, h), U);
}

}  // namespace ergolab
