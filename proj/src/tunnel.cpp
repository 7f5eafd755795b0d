#include "ergolab/tunnel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergolab/common.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// |V''| at the saddle located at x_sep. Separator locations are copied from
// d.maxima verbatim, so the nearest match is an exact one.
double separator_curvature(const WellDecomposition& d, double x_sep) {
    int best = 0;
    double gap = kInf;
    for (int j = 0; j < int(d.maxima.size()); ++j) {
        double g = std::fabs(d.maxima[j] - x_sep);
        if (g < gap) {
            gap = g;
            best = j;
        }
    }
    require(gap < 1e-9, "tunnel: separator does not match any saddle");
    double curv = -d.max_curv[best];
    require(curv > 0.0, "tunnel: separator curvature must be negative");
    return curv;
}

}  // namespace

void TunnelChain::validate() const {
    const int n = size();
    require(n >= 1, "tunnel: empty chain");
    require(int(mu.size()) == n && int(lambda.size()) == n, "tunnel: field sizes disagree");
    require(int(Q.size()) == n && int(p.size()) == n, "tunnel: matrix sizes disagree");

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (double q : Q[i]) scale = std::max(scale, std::fabs(q));
    const double tol = 1e-12 * (1.0 + scale);

    double mu_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (mu[i] <= 0.0) throw DataError("tunnel: invariant weights must be positive");
        mu_sum += mu[i];
        double row_q = 0.0, row_p = 0.0, flow = 0.0;
        for (int j = 0; j < n; ++j) {
            row_q += Q[i][j];
            row_p += p[i][j];
            flow += mu[j] * Q[j][i];
        }
        if (std::fabs(row_q) > tol) throw DataError("tunnel: rate matrix row sum nonzero");
        if (n > 1 && std::fabs(row_p - 1.0) > 1e-12)
            throw DataError("tunnel: embedded jump row does not sum to 1");
        if (std::fabs(flow) > tol) throw DataError("tunnel: mu is not invariant for Q");
        if (i + 1 < n &&
            std::fabs(mu[i] * Q[i][i + 1] - mu[i + 1] * Q[i + 1][i]) > tol)
            throw DataError("tunnel: detailed balance violated");
    }
    if (std::fabs(mu_sum - 1.0) > 1e-12) throw DataError("tunnel: mu does not sum to 1");
}

std::pair<double, double> exit_prob_exact(const PotentialView& V, double eps, int well,
                                          const WellDecomposition& d, int n_nodes) {
    require(eps > 0.0, "exit_prob: eps must be positive");
    require(well >= 0 && well < d.wells(), "exit_prob: well index out of range");
    require(n_nodes >= 11, "exit_prob: too few quadrature nodes");
    if (well == 0) return {0.0, 1.0};
    if (well == d.wells() - 1) return {1.0, 0.0};

    const double a = d.maxima[well - 1];
    const double b = d.maxima[well];
    const double xm = d.minima[well];

    // The integrand peaks at the saddles; subtracting the larger crest keeps
    // both integrals in range at any eps.
    double vmax = -kInf;
    for (int i = 0; i < 512; ++i) {
        double x = a + (b - a) * i / 511.0;
        vmax = std::max(vmax, V.v(x));
    }
    auto f = [&](double x) { return std::exp(2.0 * (V.v(x) - vmax) / (eps * eps)); };

    // Odd node counts, density matched between the two ranges.
    int n_num = std::max(11, 2 * int(n_nodes * (xm - a) / (b - a) / 2) + 1);
    int n_den = 2 * (n_nodes / 2) + 1;
    const double num = simpson(f, a, xm, n_num);
    const double den = simpson(f, a, b, n_den);
    require(den > 0.0, "exit_prob: degenerate scale integral");

    double p_right = std::min(1.0, std::max(0.0, num / den));
    return {1.0 - p_right, p_right};
}

std::pair<double, double> exit_prob_asymptotic(const WellDecomposition& d, int well) {
    require(well >= 0 && well < d.wells(), "exit_prob: well index out of range");
    if (well == 0) return {0.0, 1.0};
    if (well == d.wells() - 1) return {1.0, 0.0};
    const double kl = std::sqrt(-d.max_curv[well - 1]);
    const double kr = std::sqrt(-d.max_curv[well]);
    const double p_right = kr / (kl + kr);
    return {1.0 - p_right, p_right};
}

TunnelChain build_rate_matrix(const WellDecomposition& d, const LaplaceData& laplace) {
    const int n = int(d.deep.size());
    require(n >= 1, "tunnel: decomposition has no deep wells");
    require(int(laplace.mass.size()) == n, "tunnel: laplace data does not match decomposition");

    TunnelChain chain;
    chain.C = laplace.C;
    chain.mu = laplace.mass;
    for (int i : d.deep) chain.states.push_back(d.minima[i]);
    chain.Q.assign(n, std::vector<double>(n, 0.0));
    chain.p.assign(n, std::vector<double>(n, 0.0));
    chain.lambda.assign(n, 0.0);

    if (n == 1) {
        chain.p[0][0] = 1.0;  // no jumps; keeps the embedded row stochastic
        chain.validate();
        return chain;
    }

    for (int k = 0; k + 1 < n; ++k) {
        const double curv = separator_curvature(d, d.separators[k]);
        chain.Q[k][k + 1] = 1.0 / (chain.C * chain.mu[k] * std::sqrt(curv));
        chain.Q[k + 1][k] = 1.0 / (chain.C * chain.mu[k + 1] * std::sqrt(curv));
    }
    for (int i = 0; i < n; ++i) {
        double rate = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) rate += chain.Q[i][j];
        chain.lambda[i] = rate;
        chain.Q[i][i] = -rate;
        for (int j = 0; j < n; ++j)
            if (j != i) chain.p[i][j] = chain.Q[i][j] / rate;
    }
    chain.validate();
    return chain;
}

std::vector<double> chain_invariant(const TunnelChain& chain) {
    const int n = chain.size();
    require(n >= 1, "tunnel: empty chain");
    if (n == 1) return {1.0};

    std::vector<double> w(n, 0.0);
    w[0] = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
        const double up = chain.Q[k][k + 1];
        const double down = chain.Q[k + 1][k];
        if (up <= 0.0 || down <= 0.0)
            throw DataError("tunnel: chain is reducible (zero transition rate)");
        w[k + 1] = w[k] * up / down;
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> ChainPath::occupation(int n_states) const {
    require(n_states >= 1 && !t.empty(), "tunnel: empty chain path");
    std::vector<double> occ(n_states, 0.0);
    for (int k = 0; k < int(t.size()); ++k) {
        const double until = (k + 1 < int(t.size())) ? t[k + 1] : T;
        require(state[k] >= 0 && state[k] < n_states, "tunnel: state out of range");
        occ[state[k]] += until - t[k];
    }
    for (double& o : occ) o /= T;
    return occ;
}

ChainPath simulate_chain(const TunnelChain& chain, double T, uint64_t seed) {
    require(T > 0.0, "tunnel: horizon must be positive");
    const int n = chain.size();

    ChainPath path;
    path.T = T;
    Rng rng(seed);

    int s = 0;
    double t = 0.0;
    path.t.push_back(0.0);
    path.state.push_back(s);
    while (chain.lambda[s] > 0.0) {
        t += -std::log(rng.uniform()) / chain.lambda[s];
        if (t >= T) break;
        double u = rng.uniform();
        double acc = 0.0;
        int next = s;
        for (int j = 0; j < n; ++j) {
            if (j == s) continue;
            acc += chain.p[s][j];
            if (u <= acc) {
                next = j;
                break;
            }
        }
        if (next == s) next = (s + 1 < n) ? s + 1 : s - 1;  // guard against acc rounding
        s = next;
        path.t.push_back(t);
        path.state.push_back(s);
    }
    return path;
}

double ergodic_value_representation(const RunningCost& cost, const ControlLaw& u0,
                                    const TunnelChain& chain) {
    double rho = 0.0;
    for (int i = 0; i < chain.size(); ++i) {
        const double x = chain.states[i];
        const int node = u0.nearest_node(x);
        double rbar = 0.0;
        for (int j = 0; j < u0.set.size(); ++j) {
            const double w = u0.weights[node][j];
            if (w > 0.0) rbar += w * cost.r(x, u0.set.points[j]);
        }
        rho += rbar * chain.mu[i];
    }
    return rho;
}

}  // namespace ergolab
