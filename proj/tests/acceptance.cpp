// Acceptance gate: one criterion per invocation, selected by name on the
// command line. Each criterion prints its clauses as indented [ ok ]/[FAIL]
// lines and ends with a single "name: PASS|FAIL" verdict; the exit status is
// 0 only when every clause (including the wall-time budget) holds. All
// tolerances are pinned here, not read from configuration.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/config.hpp"
#include "ergolab/estimators.hpp"
#include "ergolab/hjb.hpp"
#include "ergolab/landscape.hpp"
#include "ergolab/model.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/tunnel.hpp"
#include "ergolab/verify.hpp"

using namespace ergolab;

namespace {

struct Gate {
    bool ok = true;

    void clause(bool pass, const char* fmt, ...) {
        char buf[768];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        std::printf("  [%s] %s\n", pass ? " ok " : "FAIL", buf);
        ok = ok && pass;
    }

    // Informational line; never affects the verdict.
    void note(const char* fmt, ...) {
        char buf[768];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        std::printf("  [note] %s\n", buf);
    }
};

std::string bundled(const char* name) {
    return std::string(ERGOLAB_SOURCE_DIR) + "/configs/" + name;
}

DriftSpec linear_drift(double k) {
    DriftSpec d;
    d.kind = DriftSpec::Kind::PolyAffine;
    d.base_coeffs = {0.0, k};
    d.K = k;
    return d;
}

Coefficient constant_sigma(double s) {
    return [s](double) { return s; };
}

double gauss_cdf(double x, double sd) { return 0.5 * (1.0 + std::erf(x / (sd * std::sqrt(2.0)))); }

// Forwards every raw step to several streaming estimators in one pass.
struct FanObserver : StepObserver {
    std::vector<StepObserver*> sinks;

    void begin_traj(int traj, double x0) override {
        for (auto* s : sinks) s->begin_traj(traj, x0);
    }
    void on_step(int traj, double t, double x, double u, double dt) override {
        for (auto* s : sinks) s->on_step(traj, t, x, u, dt);
    }
    void end_traj(int traj, bool diverged) override {
        for (auto* s : sinks) s->end_traj(traj, diverged);
    }
};

// Coupled second-moment growth on the contractive linear instance:
// E|X^eps - X|^2 <= eps^2 (1 - e^{-2t}) / 2 at every recorded time.
void run_moment_bound(Gate& g) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.batch = 10000;
    cfg.x0 = 0.0;
    cfg.seed = 101;

    std::vector<double> ladder = {0.4, 0.2, 0.1};
    auto reps = verify_moment_bound(linear_drift(-1.0), ladder, cfg);
    for (size_t i = 0; i < reps.size(); ++i) {
        g.clause(reps[i].pass, "eps=%.2g: worst horizon ratio, measured %.6g vs bound %.6g (3-se slack %.3g)",
                 ladder[i], reps[i].measured, reps[i].bound, reps[i].tolerance);
    }
}

// Pathwise envelope ordering Y1 <= X^eps - X <= Y2 for the sandwich
// -3s < -2s <= -s at eps = 0.1; the violation fraction must be exactly zero
// under the ordering tolerance 10 sqrt(dt) eps.
void run_pathwise_comparison(Gate& g) {
    BoundingFields fields;
    fields.b1 = {0.0, -3.0};
    fields.b2 = {0.0, -1.0};
    fields.sigma_hat0 = 1.0;

    DiffusionSpec sigma;
    sigma.coeffs = {0.0};

    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.batch = 192;
    cfg.x0 = 0.0;
    cfg.seed = 202;

    auto rep = verify_comparison(fields, linear_drift(-2.0), sigma, 0.1, cfg);
    g.clause(rep.pass && rep.measured == 0.0,
             "ordering violations: fraction %.6g (must be 0) at tolerance %.6g", rep.measured,
             rep.tolerance);
    g.note("%s", rep.detail.c_str());
}

// LQ ergodic value: policy iteration lands within 5% of eps^2 (sqrt(2) - 1),
// descends monotonically, and the simulated cost under the computed feedback
// agrees with the closed form within three standard errors.
void run_lq_value(Gate& g) {
    auto cfg = load_experiment(bundled("lq.json"));
    double eps = 0.5;
    double rho_star = eps * eps * (std::sqrt(2.0) - 1.0);

    auto sol = solve_ergodic_hjb(cfg.drift, eps, cfg.cost, cfg.grid, cfg.control);
    double rel = std::fabs(sol.rho - rho_star) / rho_star;
    g.clause(sol.converged && rel <= 0.05, "rho %.6g vs closed form %.6g, relative gap %.3g <= 0.05",
             sol.rho, rho_star, rel);

    double worst_rise = 0.0;
    for (size_t i = 1; i < sol.rho_log.size(); ++i)
        worst_rise = std::max(worst_rise, sol.rho_log[i] - sol.rho_log[i - 1]);
    g.clause(worst_rise <= 1e-12, "rho nonincreasing across %d sweeps, worst rise %.3g", sol.sweeps,
             worst_rise);

    SimConfig sim;
    sim.dt = 1e-3;
    sim.T = 200.0;
    sim.batch = 24;
    sim.x0 = 0.5;
    sim.seed = 303;
    sim.record_every = 200;
    StreamingCost sc(cfg.cost, 0.2 * sim.T);
    ControlSource feedback;
    feedback.law = &sol.policy;
    simulate(cfg.drift, constant_sigma(eps), feedback, sim, &sc);
    auto est = sc.finalize(sim.T, 0.2);
    double gap = std::fabs(est.rho - rho_star);
    g.clause(gap <= 3.0 * est.se, "simulated cost under the feedback %.6g +- %.2g, gap to closed form %.3g <= 3 se %.3g",
             est.rho, est.se, gap, 3.0 * est.se);
}

// Curvature asymptotics of the partition integral on the bundled symmetric
// double well: the quadrature/asymptotics ratio gap shrinks along the eps
// ladder, is below 0.15 at eps = 0.2, and the per-well masses are (1/2, 1/2)
// to 1e-6 at every rung.
void run_laplace_partition(Gate& g) {
    auto cfg = load_experiment(bundled("double_well.json"));
    const auto& V = cfg.potential;
    auto wells = analyze_landscape(V.view(), V.x_lo, V.x_hi);

    std::vector<double> ladder = {0.4, 0.3, 0.2};
    std::vector<double> gaps;
    bool masses_ok = true;
    double worst_mass = 0.0;
    for (double eps : ladder) {
        auto lap = laplace_partition(wells, eps);
        auto gib = gibbs_quadrature(V.view(), eps, V.x_lo, V.x_hi, 400);
        gaps.push_back(std::fabs(gib.partition / lap.partition - 1.0));
        for (double m : lap.mass) {
            worst_mass = std::max(worst_mass, std::fabs(m - 0.5));
            masses_ok = masses_ok && std::fabs(m - 0.5) <= 1e-6;
        }
    }
    g.clause(gaps[0] > gaps[1] && gaps[1] > gaps[2],
             "ratio gap shrinks along the ladder: %.4g > %.4g > %.4g", gaps[0], gaps[1], gaps[2]);
    g.clause(gaps[2] < 0.15, "ratio gap at eps=0.2: %.4g < 0.15", gaps[2]);
    g.clause(masses_ok, "per-well masses within 1e-6 of 1/2 at every rung (worst %.2g)", worst_mass);
}

// Exit-time exponent and exit-side law. The exponent clause asserts
// eps^2 log E[tau] lands within 30% of the coarse metastability scale
// 2 lambda_i at the smallest eps and increases along the ladder; the measured
// exponents instead track twice the full barrier height (see the companion
// diagnostic), so this clause fails and the criterion reports that honestly.
void run_exit_law(Gate& g) {
    auto dw = load_experiment(bundled("double_well.json"));
    auto wells = analyze_landscape(dw.potential.view(), dw.potential.x_lo, dw.potential.x_hi);

    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 2e4;
    cfg.batch = 40;
    cfg.seed = 1234;

    auto reps = verify_exit_law(dw.potential, wells, {0.35, 0.3, 0.25}, cfg);
    for (size_t w = 0; 2 * w + 1 < reps.size(); ++w) {
        const auto& claimed = reps[2 * w];
        const auto& depth = reps[2 * w + 1];
        g.clause(claimed.pass, "well %zu exponent vs coarse scale %.4g (30%% band, increasing): %s",
                 w, claimed.bound, claimed.detail.c_str());
        g.note("well %zu companion depth-scale diagnostic (bound %.4g): %s, %s", w, depth.bound,
               depth.pass ? "pass" : "fail", depth.detail.c_str());
    }

    auto asym = load_experiment(bundled("asym_well.json"));
    auto aw = analyze_landscape(asym.potential.view(), asym.potential.x_lo, asym.potential.x_hi);
    SimConfig side_cfg;
    side_cfg.dt = 1e-3;
    side_cfg.T = 2e3;
    side_cfg.batch = 600;
    side_cfg.seed = 604;
    auto side = verify_exit_location(asym.potential, aw, 1, {0.35, 0.3}, side_cfg);
    for (const auto& rep : side) {
        g.clause(rep.pass, "%s: measured %.4g vs %.4g (tol %.3g)", rep.check.c_str(), rep.measured,
                 rep.bound, rep.tolerance);
    }
}

// Long-run occupation against the two-state chain invariant law and the
// uncontrolled ergodic value against the chain representation, both from one
// mass-proportioned batch at eps = 0.25.
void run_chain_limit(Gate& g) {
    auto dw = load_experiment(bundled("double_well.json"));
    const auto& V = dw.potential;
    auto wells = analyze_landscape(V.view(), V.x_lo, V.x_hi);
    double eps = 0.25;

    auto lap = laplace_partition(wells, eps);
    auto chain = build_rate_matrix(wells, lap);
    auto mu = chain.mu;

    DriftSpec drift;
    drift.kind = DriftSpec::Kind::GradientFlow;
    drift.potential = V;
    drift.K = 1.0;

    RunningCost cost;
    cost.x_coeffs = {0.0, 0.0, 1.0};
    cost.x_center = 1.0;  // r = (x - 1)^2 separates the wells
    cost.record_bounds(V.x_lo, V.x_hi, ControlSet::make(-1.0, 1.0, 3));

    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 5e3;
    cfg.batch = 96;
    cfg.seed = 606;
    cfg.record_every = 5000;
    cfg.x0s.reserve(size_t(cfg.batch));
    for (int j = 0; j < cfg.batch; ++j)  // starts proportional to mu = (1/2, 1/2)
        cfg.x0s.push_back(j % 2 == 0 ? wells.minima[0] : wells.minima[1]);

    StreamingWells sw(wells, 0.1 * cfg.T);
    StreamingCost sc(cost, 0.1 * cfg.T);
    FanObserver fan;
    fan.sinks = {&sw, &sc};
    simulate(drift, constant_sigma(eps), ControlSource{}, cfg, &fan);

    auto frac = sw.fractions();
    double l1 = 0.0;
    for (size_t i = 0; i < frac.size(); ++i) l1 += std::fabs(frac[i] - mu[i]);
    g.clause(l1 <= 0.1, "occupation (%.4g, %.4g) vs invariant (%.4g, %.4g): L1 %.4g <= 0.1",
             frac[0], frac[1], mu[0], mu[1], l1);

    auto u0 = ControlLaw::constant(ControlSet::make(-1.0, 1.0, 3), linspace(V.x_lo, V.x_hi, 601), 0.0);
    double rep = ergodic_value_representation(cost, u0, chain);
    auto est = sc.finalize(cfg.T, 0.1);
    double gap = std::fabs(est.rho - rep);
    g.clause(gap <= 0.1 * rep, "uncontrolled value %.5g +- %.2g vs representation %.5g: gap %.3g <= %.3g",
             est.rho, est.se, rep, gap, 0.1 * rep);
}

// Start-point selection on the bundled double well with r = (x - 1)^2: the
// noiseless values from the two deep minima differ by exactly 4, and at
// eps = 0.25 the per-start values agree within three standard errors.
void run_selection_demo(Gate& g) {
    auto dw = load_experiment(bundled("double_well.json"));
    const auto& V = dw.potential;
    auto wells = analyze_landscape(V.view(), V.x_lo, V.x_hi);

    RunningCost cost;
    cost.x_coeffs = {0.0, 0.0, 1.0};
    cost.x_center = 1.0;
    cost.record_bounds(V.x_lo, V.x_hi, ControlSet::make(-1.0, 1.0, 3));

    SimConfig cfg_value;
    cfg_value.dt = 1e-3;
    cfg_value.T = 2e3;
    cfg_value.batch = 64;
    cfg_value.seed = 808;

    SimConfig cfg_select;
    cfg_select.dt = 4e-3;
    cfg_select.T = 4e4;
    cfg_select.batch = 24;
    cfg_select.seed = 909;

    auto reps = verify_value_and_selection(V, wells, cost, 0.25, cfg_value, cfg_select);
    const auto& degen = reps[1];
    const auto& mixing = reps[2];
    g.clause(degen.pass && std::fabs(degen.measured - 4.0) <= 1e-6,
             "noiseless start spread %.8g, exactly r(-1) - r(1) = 4", degen.measured);
    g.clause(mixing.pass, "eps=0.25 start values agree: spread %.4g within 3-se tolerance %.4g",
             mixing.measured, mixing.tolerance);
    g.note("value representation clause (held in the chain-limit criterion): %s, %s",
           reps[0].pass ? "pass" : "fail", reps[0].detail.c_str());
}

// Stationarity residual of the analytic Ornstein-Uhlenbeck law: the binned
// Gaussian annihilates the generator on every bundled bump to 1e-2, and
// deliberately wrong histograms (inflated variance, shifted mean) do not.
void run_invariance_residual(Gate& g) {
    double eps = 0.5;
    double sd = eps / std::sqrt(2.0);
    int bins = 400;

    auto gaussian_hist = [&](double mean, double scale) {
        OccupationHistogram h;
        h.edges = linspace(-2.5, 2.5, bins + 1);
        h.mass.assign(size_t(bins), 0.0);
        double inside = 0.0;
        for (int b = 0; b < bins; ++b) {
            h.mass[size_t(b)] = gauss_cdf(h.edges[size_t(b) + 1] - mean, sd * scale) -
                                gauss_cdf(h.edges[size_t(b)] - mean, sd * scale);
            inside += h.mass[size_t(b)];
        }
        h.out_mass = 1.0 - inside;
        h.normalize();
        return h;
    };

    DiffusionSpec flat;
    flat.coeffs = {0.0};
    auto drift = linear_drift(-1.0);
    auto fs = bspline_bumps(3, -2.0, 2.0);
    auto more = bspline_bumps(5, -2.0, 2.0);
    fs.insert(fs.end(), more.begin(), more.end());

    auto max_residual = [&](const OccupationHistogram& h) {
        double worst = 0.0;
        for (double r : generator_residual(h, drift, flat, nullptr, eps, fs))
            worst = std::max(worst, std::fabs(r));
        return worst;
    };

    double good = max_residual(gaussian_hist(0.0, 1.0));
    g.clause(good < 1e-2, "stationary law: max |int Lf dmu| over %zu bumps %.3g < 1e-2", fs.size(),
             good);
    double wide = max_residual(gaussian_hist(0.0, 1.4));
    g.clause(wide >= 1e-2, "inflated variance is flagged: max residual %.3g >= 1e-2", wide);
    double shifted = max_residual(gaussian_hist(0.4, 1.0));
    g.clause(shifted >= 1e-2, "shifted mean is flagged: max residual %.3g >= 1e-2", shifted);
}

// Closed-form quasi-potential against the path-space action search on three
// attracting fields, then the nondegenerate-vs-degenerate value gap bound on
// the bundled constant-sigma configuration.
void run_quasipotential_gap(Gate& g) {
    struct Field {
        const char* name;
        std::function<double(double)> b;
    };
    std::vector<Field> fields = {{"-y", [](double y) { return -y; }},
                                 {"-2y", [](double y) { return -2.0 * y; }},
                                 {"-y^3", [](double y) { return -y * y * y; }}};
    auto grid = linspace(-1.5, 1.5, 301);
    double target = 1.2;
    for (const auto& f : fields) {
        auto curve = quasi_potential_1d(f.b, 1.0, grid);
        auto act = action_oracle(f.b, 1.0, target);
        double qp = curve.at(target);
        g.clause(qp <= act.action * 1.02, "b = %s: quasi-potential %.6g <= action %.6g + 2%%",
                 f.name, qp, act.action);
    }

    auto cfg = load_experiment(bundled("constant_sigma.json"));
    auto reps = verify_constant_sigma_gap(cfg.drift, cfg.sigma, cfg.cost, cfg.envelope, cfg.control,
                                          cfg.grid, cfg.eps, cfg.cap_R);
    for (const auto& rep : reps) {
        g.clause(rep.pass, "value gap bound: measured %.5g <= %.5g (tol %.2g), %s", rep.measured,
                 rep.bound, rep.tolerance, rep.detail.c_str());
    }
}

struct Criterion {
    const char* name;
    double budget_s;
    void (*run)(Gate&);
};

const Criterion kCriteria[] = {
    {"moment_bound", 60.0, run_moment_bound},
    {"pathwise_comparison", 30.0, run_pathwise_comparison},
    {"lq_value", 60.0, run_lq_value},
    {"laplace_partition", 10.0, run_laplace_partition},
    {"exit_law", 600.0, run_exit_law},
    {"chain_limit", 600.0, run_chain_limit},
    {"selection_demo", 300.0, run_selection_demo},
    {"invariance_residual", 5.0, run_invariance_residual},
    {"quasipotential_gap", 120.0, run_quasipotential_gap},
};

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion>\ncriteria:\n");
        for (const auto& c : kCriteria) std::fprintf(stderr, "  %s\n", c.name);
        return 2;
    }
    for (const auto& c : kCriteria) {
        if (std::strcmp(argv[1], c.name) != 0) continue;
        Gate g;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(g);
        } catch (const std::exception& e) {
            g.clause(false, "exception: %s", e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        g.clause(secs <= c.budget_s, "wall time %.1fs within %.0fs budget", secs, c.budget_s);
        std::printf("%s: %s\n", c.name, g.ok ? "PASS" : "FAIL");
        return g.ok ? 0 : 1;
    }
    std::fprintf(stderr, "unknown criterion '%s'\n", argv[1]);
    return 2;
}
