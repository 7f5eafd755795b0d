#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "doctest.h"
#include "ergolab/common.hpp"
#include "ergolab/landscape.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/tunnel.hpp"

using namespace ergolab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Piecewise-quintic landscape with three wells: minima at -2, 0, 2 of values
// -1, 0, -1, saddles at +-1 of equal height 0.2 and curvatures -4 (left) and
// -1 (right), outer minima curvatures 1 and 4. C^2 at every knot.
Potential1D asym_well() {
    Potential1D V;
    V.x_lo = -3.0;
    V.x_hi = 3.0;
    V.pieces = {
        {-3.0, {-19.0, -28.0, -14.5, -2.5}},
        {-2.0, {19.4, 80.0, 127.5, 96.5, 34.5, 4.7}},
        {-1.0, {0.0, 0.0, 1.0, 3.0, 4.0, 1.8}},
        {0.0, {0.0, 0.0, 1.0, -1.5, 1.0, -0.3}},
        {1.0, {25.4, -98.0, 147.0, -105.5, 36.0, -4.7}},
        {2.0, {-1.0, 4.0, -4.0, 1.0}},
    };
    V.validate();
    return V;
}

// Center well bounded by saddles of curvature -6 (at -1) and -24 (at 0.5),
// both of height 0.3. The steep saddle sits on a narrower piece so every
// piece stays monotone between its knots.
Potential1D saddle_624() {
    Potential1D V;
    V.x_lo = -3.0;
    V.x_hi = 3.0;
    V.pieces = {
        {-3.0, {-4.5, -8.0, -5.0, -1.0}},
        {-2.0, {-2.9, -4.0, 5.0, 10.0, 5.0, 0.8}},
        {-1.0, {0.0, 0.0, 1.5, 4.5, 6.0, 2.7}},
        {0.0, {0.0, 0.0, 1.5, -8.9999999999999769, 41.999999999999929, -50.399999999999942}},
        {0.5,
         {-8.6790123456790162, 52.901234567901255, -115.23456790123461, 116.09876543209882,
          -56.098765432098787, 10.587654320987658}},
        {1.25, {1.4497084548104957, -3.4293002915451898, 1.7434402332361518, -0.19825072886297379}},
    };
    V.validate();
    return V;
}

Potential1D quartic_double_well() {
    Potential1D V;
    V.coeffs = {0.0, 0.0, -0.5, 0.0, 0.25};
    V.x_lo = -3.0;
    V.x_hi = 3.0;
    V.validate();
    return V;
}

}  // namespace

TEST_SUITE_BEGIN("tunnel");

TEST_CASE("asymmetric landscape decomposes as designed") {
    Potential1D V = asym_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);

    REQUIRE(d.wells() == 3);
    CHECK(d.minima[0] == doctest::Approx(-2.0).epsilon(1e-7));
    CHECK(d.minima[1] == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(d.minima[2] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(d.maxima[0] == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(d.maxima[1] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(d.min_value[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(d.max_value[0] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(d.max_value[1] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(d.min_curv[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.min_curv[1] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(d.min_curv[2] == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d.max_curv[0] == doctest::Approx(-4.0).epsilon(1e-6));
    CHECK(d.max_curv[1] == doctest::Approx(-1.0).epsilon(1e-6));

    // Outer wells are 1.2 deep against their saddles, the center well only 0.2.
    REQUIRE(d.deep == std::vector<int>{0, 2});
    CHECK(d.lambda == doctest::Approx(0.6).epsilon(1e-7));
    REQUIRE(d.separators.size() == 1);
    // Equal saddle heights: the leftmost wins.
    CHECK(d.separators[0] == doctest::Approx(-1.0).epsilon(1e-7));
}

TEST_CASE("asymptotic exit splits follow crest curvatures") {
    Potential1D V = asym_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);

    // Crest curvatures 4 (left) and 1 (right): the flatter right crest takes
    // 1/(2+1) of the scale-function mass.
    auto pc = exit_prob_asymptotic(d, 1);
    CHECK(pc.second == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(pc.first + pc.second == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(exit_prob_asymptotic(d, 0) == std::pair<double, double>(0.0, 1.0));
    CHECK(exit_prob_asymptotic(d, 2) == std::pair<double, double>(1.0, 0.0));

    // Synthetic curvature pairs: ratios 6:24 and 1:4 both give sqrt ratio 1:2.
    WellDecomposition s;
    s.minima = {-1.0, 0.0, 1.0};
    s.maxima = {-0.5, 0.5};
    s.max_curv = {-6.0, -24.0};
    CHECK(exit_prob_asymptotic(s, 1).second == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    s.max_curv = {-1.0, -4.0};
    CHECK(exit_prob_asymptotic(s, 1).second == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    s.max_curv = {-5.0, -5.0};
    CHECK(exit_prob_asymptotic(s, 1).second == 0.5);
}

TEST_CASE("exact exit ratio is symmetric for a symmetric well") {
    // V = x^2 (x^2-4)^2 / 16: minima at -2, 0, 2, saddles symmetric.
    Potential1D V;
    V.coeffs = {0.0, 0.0, 1.0, 0.0, -0.5, 0.0, 0.0625};
    V.x_lo = -3.1;
    V.x_hi = 3.1;
    V.validate();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    REQUIRE(d.wells() == 3);

    auto p = exit_prob_exact(V.view(), 0.5, 1, d);
    CHECK(p.second == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(p.first == doctest::Approx(0.5).epsilon(1e-10));

    CHECK(exit_prob_exact(V.view(), 0.5, 0, d) == std::pair<double, double>(0.0, 1.0));
    CHECK(exit_prob_exact(V.view(), 0.5, 2, d) == std::pair<double, double>(1.0, 0.0));

    CHECK_THROWS_AS(exit_prob_exact(V.view(), 0.0, 1, d), ParamError);
    CHECK_THROWS_AS(exit_prob_exact(V.view(), 0.5, 7, d), ParamError);
}

TEST_CASE("exact exit ratio matches an independent quadrature oracle") {
    // Reference values from adaptive quadrature of the same scale-function
    // ratio in an independent implementation.
    Potential1D A = asym_well();
    WellDecomposition da = analyze_landscape(A.view(), A.x_lo, A.x_hi);
    CHECK(exit_prob_exact(A.view(), 0.25, 1, da).second ==
          doctest::Approx(0.365387).epsilon(5e-4));

    Potential1D B = saddle_624();
    WellDecomposition db = analyze_landscape(B.view(), B.x_lo, B.x_hi);
    REQUIRE(db.wells() == 3);
    double p_right = exit_prob_exact(B.view(), 0.2, 1, db).second;
    CHECK(p_right == doctest::Approx(0.672518).epsilon(5e-4));
    // Crest curvatures 6 and 24 put the limit at 2/3; at eps = 0.2 the
    // quadrature sits within an O(eps) band of it.
    CHECK(std::fabs(p_right - 2.0 / 3.0) < 0.03);
}

TEST_CASE("exact splits approach the asymptotic limit monotonically") {
    Potential1D V = asym_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    const double limit = exit_prob_asymptotic(d, 1).second;

    double prev_gap = 1.0;
    for (double eps : {0.4, 0.3, 0.2, 0.15}) {
        double gap = std::fabs(exit_prob_exact(V.view(), eps, 1, d).second - limit);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.015);
}

TEST_CASE("rate matrix of the symmetric double well") {
    Potential1D V = quartic_double_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    REQUIRE(d.deep.size() == 2);
    TunnelChain chain = build_rate_matrix(d, laplace_partition(d, 0.3));

    const double r2 = std::sqrt(2.0);
    CHECK(chain.C == doctest::Approx(r2).epsilon(1e-9));
    CHECK(chain.mu[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(chain.mu[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(chain.Q[0][1] == doctest::Approx(r2).epsilon(1e-7));
    CHECK(chain.Q[0][0] == doctest::Approx(-r2).epsilon(1e-7));
    CHECK(chain.Q[1][0] == doctest::Approx(r2).epsilon(1e-7));
    CHECK(chain.lambda[0] == doctest::Approx(r2).epsilon(1e-7));
    CHECK(chain.p[0][1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(chain.p[1][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_NOTHROW(chain.validate());
}

TEST_CASE("rate matrix of the asymmetric instance") {
    Potential1D V = asym_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    TunnelChain chain = build_rate_matrix(d, laplace_partition(d, 0.25));

    // Curvature weights 1/sqrt(1) and 1/sqrt(4) normalize to (2/3, 1/3); the
    // shared separator at -1 has |V''| = 4, so C mu_i sqrt(4) = (2, 1).
    REQUIRE(chain.size() == 2);
    CHECK(chain.states[0] == doctest::Approx(-2.0).epsilon(1e-7));
    CHECK(chain.states[1] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(chain.mu[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(chain.mu[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(chain.Q[0][1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(chain.Q[1][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(chain.mu[0] * chain.Q[0][1] == doctest::Approx(chain.mu[1] * chain.Q[1][0]).epsilon(1e-12));
}

TEST_CASE("single deep well yields the trivial chain") {
    Potential1D V;
    V.coeffs = {0.0, 0.1, -0.5, 0.0, 0.25};  // tilted: only the left well is deep
    V.x_lo = -3.0;
    V.x_hi = 3.0;
    V.validate();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    REQUIRE(d.deep.size() == 1);

    TunnelChain chain = build_rate_matrix(d, laplace_partition(d, 0.3));
    CHECK(chain.size() == 1);
    CHECK(chain.Q[0][0] == 0.0);
    CHECK(chain.lambda[0] == 0.0);
    CHECK(chain.mu[0] == 1.0);
    CHECK(chain_invariant(chain) == std::vector<double>{1.0});

    ChainPath path = simulate_chain(chain, 100.0, 7);
    CHECK(path.jumps() == 0);
    CHECK(path.state == std::vector<int>{0});
    CHECK(path.occupation(1) == std::vector<double>{1.0});
}

TEST_CASE("invariant law by product formula matches direct solve") {
    const int n = 5;
    Rng rng(314159);
    TunnelChain chain;
    chain.states.assign(n, 0.0);
    chain.Q.assign(n, std::vector<double>(n, 0.0));
    for (int k = 0; k + 1 < n; ++k) {
        chain.Q[k][k + 1] = 0.5 + 1.5 * rng.uniform();
        chain.Q[k + 1][k] = 0.5 + 1.5 * rng.uniform();
    }
    for (int i = 0; i < n; ++i) {
        double rate = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) rate += chain.Q[i][j];
        chain.Q[i][i] = -rate;
    }

    std::vector<double> mu = chain_invariant(chain);

    // Direct solve of mu Q = 0, sum mu = 1 as a stacked least-squares system.
    Eigen::MatrixXd A(n + 1, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) A(j, i) = chain.Q[i][j];
    for (int i = 0; i < n; ++i) A(n, i) = 1.0;
    b(n) = 1.0;
    Eigen::VectorXd direct = A.colPivHouseholderQr().solve(b);

    for (int i = 0; i < n; ++i) CHECK(mu[i] == doctest::Approx(direct(i)).epsilon(1e-12));

    chain.Q[2][3] = 0.0;
    CHECK_THROWS_AS(chain_invariant(chain), DataError);
}

TEST_CASE("triple-deep-well chain matches a null-space oracle") {
    // Hand-built decomposition: three equally deep wells with curvatures
    // (2, 8, 18) and separators of curvature (3, 5).
    WellDecomposition d;
    d.minima = {-2.0, 0.0, 2.0};
    d.maxima = {-1.0, 1.0};
    d.min_value = {0.0, 0.0, 0.0};
    d.max_value = {1.0, 1.0};
    d.min_curv = {2.0, 8.0, 18.0};
    d.max_curv = {-3.0, -5.0};
    d.depth_left = {kInf, 1.0, 1.0};
    d.depth_right = {1.0, 1.0, kInf};
    d.lambda_i = {0.5, 0.5, 0.5};
    d.has_metastability = true;
    d.deep = {0, 1, 2};
    d.lambda = 0.5;
    d.separators = {-1.0, 1.0};

    TunnelChain chain = build_rate_matrix(d, laplace_partition(d, 0.3));

    // Curvature weights 1/sqrt(2) : 1/sqrt(8) : 1/sqrt(18) = 6 : 3 : 2.
    CHECK(chain.mu[0] == doctest::Approx(6.0 / 11.0).epsilon(1e-12));
    CHECK(chain.mu[1] == doctest::Approx(3.0 / 11.0).epsilon(1e-12));
    CHECK(chain.mu[2] == doctest::Approx(2.0 / 11.0).epsilon(1e-12));

    std::vector<double> prod = chain_invariant(chain);
    for (int i = 0; i < 3; ++i) CHECK(prod[i] == doctest::Approx(chain.mu[i]).epsilon(1e-12));

    Eigen::MatrixXd Qt(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Qt(j, i) = chain.Q[i][j];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Qt);
    lu.setThreshold(1e-10);
    REQUIRE(lu.dimensionOfKernel() == 1);
    Eigen::VectorXd kernel = lu.kernel().col(0);
    kernel /= kernel.sum();
    for (int i = 0; i < 3; ++i) CHECK(kernel(i) == doctest::Approx(chain.mu[i]).epsilon(1e-10));
}

TEST_CASE("chain paths are reproducible and ergodic") {
    Potential1D V = quartic_double_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    TunnelChain chain = build_rate_matrix(d, laplace_partition(d, 0.3));

    const double T = 1e4 / std::sqrt(2.0);
    ChainPath path = simulate_chain(chain, T, 99);
    ChainPath again = simulate_chain(chain, T, 99);
    CHECK(path.t == again.t);
    CHECK(path.state == again.state);
    CHECK(simulate_chain(chain, T, 100).t != path.t);

    // About lambda T = 1e4 holding periods; the two-state occupation obeys
    // the ergodic theorem.
    CHECK(path.jumps() > 5000);
    std::vector<double> occ = path.occupation(2);
    CHECK(std::fabs(occ[0] - 0.5) < 0.05);
    CHECK(occ[0] + occ[1] == doctest::Approx(1.0).epsilon(1e-12));

    // Holding times in each state are exponential with mean 1/lambda.
    for (int s = 0; s < 2; ++s) {
        MeanVar hold;
        for (int k = 0; k + 1 < int(path.t.size()); ++k)
            if (path.state[k] == s) hold.add(path.t[k + 1] - path.t[k]);
        double target = 1.0 / chain.lambda[s];
        CHECK(std::fabs(hold.mean - target) < 3.0 * hold.se());
    }
}

TEST_CASE("ergodic value representation over the chain") {
    Potential1D V = quartic_double_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    TunnelChain chain = build_rate_matrix(d, laplace_partition(d, 0.3));

    ControlSet set = ControlSet::make(-1.0, 1.0, 5);
    std::vector<double> grid = {-1.0, 1.0};

    RunningCost constant;
    constant.x_coeffs = {0.7};
    CHECK(ergodic_value_representation(constant, ControlLaw::constant(set, grid, 0.0), chain) ==
          0.7);

    // r = (x-1)^2 at states (-1, 1) with weights (1/2, 1/2): 2 exactly.
    RunningCost shifted;
    shifted.x_center = 1.0;
    shifted.x_coeffs = {0.0, 0.0, 1.0};
    // States sit at the numerically located minima, so r sees them at the
    // bisection tolerance.
    CHECK(ergodic_value_representation(shifted, ControlLaw::constant(set, grid, 0.0), chain) ==
          doctest::Approx(2.0).epsilon(1e-8));

    // Relaxed law with barycenter 0.3 mixes the control points 0 and 0.5 with
    // weights (0.4, 0.6); the chain averages r = u^2 over the mixture (0.15),
    // not at the barycenter (0.09).
    RunningCost quad_u;
    quad_u.u_coeffs = {0.0, 0.0, 1.0};
    ControlLaw relaxed =
        ControlLaw::from_values_exact(set, grid, [](double) { return 0.3; });
    CHECK(ergodic_value_representation(quad_u, relaxed, chain) ==
          doctest::Approx(0.4 * 0.0 + 0.6 * 0.25).epsilon(1e-12));
}

TEST_CASE("exit sides of the diffusion match the exact ratio") {
    Potential1D V = asym_well();
    WellDecomposition d = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    const double eps = 0.25;
    const double p_right = exit_prob_exact(V.view(), eps, 1, d).second;

    DriftSpec drift;
    drift.kind = DriftSpec::Kind::GradientFlow;
    drift.potential = V;

    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 2e4;  // mean exit time is about 900 at this noise level
    cfg.batch = 200;
    cfg.seed = 2026;
    cfg.x0 = 0.0;
    cfg.guard_lo = -8.0;
    cfg.guard_hi = 8.0;
    cfg.record_every = 0;

    auto exits = first_exit(drift, [=](double) { return eps; }, ControlSource{}, -1.0, 1.0, cfg);
    int right = 0;
    for (const auto& e : exits) {
        REQUIRE_FALSE(e.censored);
        if (e.side > 0) ++right;
    }
    double phat = double(right) / cfg.batch;
    double se = std::sqrt(p_right * (1.0 - p_right) / cfg.batch);
    CHECK(std::fabs(phat - p_right) < 3.0 * se);
}

TEST_SUITE_END();
