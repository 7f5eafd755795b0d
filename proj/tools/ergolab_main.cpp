#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ergolab/config.hpp"
#include "ergolab/estimators.hpp"
#include "ergolab/hjb.hpp"
#include "ergolab/landscape.hpp"
#include "ergolab/report.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/tunnel.hpp"
#include "ergolab/verify.hpp"

namespace {

using namespace ergolab;

void need(bool present, const std::string& field, const std::string& command) {
    if (!present) throw ConfigError(field + ": required by the " + command + " command");
}

WellDecomposition landscape_of(const ExperimentConfig& cfg) {
    return analyze_landscape(cfg.potential.view(), cfg.potential.x_lo, cfg.potential.x_hi);
}

// Keeps stored paths near 2e6 CSV rows; the integrator still takes every step.
SimConfig capped_recording(SimConfig sim) {
    if (sim.record_every < 1) sim.record_every = 1;
    const long cap = 2'000'000;
    int every = sim.record_every;
    while ((long(sim.steps()) / every + 1) * long(sim.batch) > cap) every *= 10;
    if (every != sim.record_every) {
        std::fprintf(stderr, "note: record_every raised %d -> %d to bound paths.csv size\n",
                     sim.record_every, every);
        sim.record_every = every;
    }
    return sim;
}

int run_simulate(const ExperimentConfig& cfg, const std::string& outdir) {
    need(cfg.has_drift, "problem.drift (or problem.potential)", "simulate");
    SimConfig sim = capped_recording(cfg.sim);

    const double eps0 = cfg.eps.empty() ? 0.0 : cfg.eps.front();
    Coefficient coeff;
    if (cfg.eps.empty())
        coeff = [&cfg](double x) { return cfg.sigma.sigma(x); };
    else
        coeff = [&cfg, eps0](double x) { return cfg.sigma.perturbed_sqrt(x, eps0); };

    ArtifactWriter writer(outdir);
    PathBatch paths = simulate(cfg.drift, coeff, ControlSource{}, sim);
    writer.write_text("paths.csv", csv_path_batch(paths));

    double lo, hi;
    if (!cfg.grid.empty()) {
        lo = cfg.grid.front(), hi = cfg.grid.back();
    } else if (cfg.has_potential) {
        lo = cfg.potential.x_lo, hi = cfg.potential.x_hi;
    } else {
        lo = -1.0, hi = 1.0;
        for (const auto& xj : paths.x)
            for (double v : xj) lo = std::min(lo, v), hi = std::max(hi, v);
    }
    writer.write_text("histogram.csv", csv_histogram(empirical_measure(paths, 200, 0.2, lo, hi)));

    if (cfg.has_cost) {
        ErgodicEstimate est = ergodic_cost(paths, cfg.cost, 0.2);
        writer.write_text("estimate.json", json_estimate(est, sim.seed));
        writer.write_text("estimate.csv", csv_estimate(est));
    }

    // Exit times are worth sampling only where the landscape traps the flow.
    if (cfg.has_potential && !cfg.eps.empty()) {
        WellDecomposition wells = landscape_of(cfg);
        if (wells.has_metastability) {
            const int w = wells.deep.front();
            const double a = w > 0 ? wells.maxima[size_t(w) - 1] : cfg.potential.x_lo;
            const double b = size_t(w) < wells.maxima.size() ? wells.maxima[size_t(w)]
                                                             : cfg.potential.x_hi;
            SimConfig exit_cfg = sim;
            exit_cfg.x0s.clear();
            exit_cfg.x0 = wells.minima[size_t(w)];
            writer.write_text("exits.csv", csv_exit_samples(first_exit(
                                               cfg.drift, coeff, ControlSource{}, a, b, exit_cfg)));
        }
    }
    writer.finalize("simulate", sim.seed);
    std::printf("simulate: wrote artifacts to %s\n", outdir.c_str());
    return 0;
}

int run_hjb(const ExperimentConfig& cfg, const std::string& outdir) {
    need(cfg.has_drift, "problem.drift (or problem.potential)", "hjb");
    need(cfg.has_cost, "problem.cost", "hjb");
    need(!cfg.grid.empty(), "problem.grid", "hjb");
    need(!cfg.eps.empty(), "eps", "hjb");

    const double eps0 = cfg.eps.front();
    HjbSolution sol = solve_ergodic_hjb(cfg.drift, eps0, cfg.cost, cfg.grid, cfg.control, cfg.hjb);

    ArtifactWriter writer(outdir);
    writer.write_text("hjb.csv", csv_hjb(sol));
    writer.write_text("hjb.json", json_hjb_scalars(sol, eps0, cfg.seed));
    writer.finalize("hjb", cfg.seed);
    std::printf("hjb: rho_eps = %s at eps = %s (%d sweeps); wrote artifacts to %s\n",
                format_double(sol.rho).c_str(), format_double(eps0).c_str(), sol.sweeps,
                outdir.c_str());
    return 0;
}

int run_landscape(const ExperimentConfig& cfg, const std::string& outdir) {
    need(cfg.has_potential, "problem.potential", "landscape");
    if (cfg.chain_eps <= 0.0)
        throw ConfigError("eps: landscape needs a temperature (eps ladder or tunnel.eps)");

    WellDecomposition wells = landscape_of(cfg);
    LaplaceData lap = laplace_partition(wells, cfg.chain_eps);
    GibbsResult gibbs = gibbs_quadrature(cfg.potential.view(), cfg.chain_eps,
                                         cfg.potential.x_lo, cfg.potential.x_hi, 400);

    std::string laplace_json = "{\n";
    laplace_json += "  \"eps\": " + json_number(lap.eps) + ",\n";
    laplace_json += "  \"C\": " + json_number(lap.C) + ",\n";
    laplace_json += "  \"partition_laplace\": " + json_number(lap.partition) + ",\n";
    laplace_json += "  \"partition_quadrature\": " + json_number(gibbs.partition) + ",\n";
    laplace_json += "  \"mass\": " + json_array(lap.mass) + ",\n";
    laplace_json += "  \"seed\": " + std::to_string(cfg.seed) + "\n}\n";

    ArtifactWriter writer(outdir);
    writer.write_text("landscape.json", json_decomposition(wells));
    writer.write_text("laplace.json", laplace_json);
    writer.write_text("gibbs.csv", csv_histogram(gibbs.hist));
    writer.finalize("landscape", cfg.seed);
    std::printf("landscape: %d wells, lambda = %s; wrote artifacts to %s\n", wells.wells(),
                format_double(wells.lambda).c_str(), outdir.c_str());
    return 0;
}

int run_tunnel(const ExperimentConfig& cfg, const std::string& outdir) {
    need(cfg.has_potential, "problem.potential", "tunnel");
    if (cfg.chain_eps <= 0.0)
        throw ConfigError("tunnel.eps: required by the tunnel command (or provide an eps ladder)");
    const double eps = cfg.chain_eps;

    WellDecomposition wells = landscape_of(cfg);
    TunnelChain chain = build_rate_matrix(wells, laplace_partition(wells, eps));
    chain.validate();

    ArtifactWriter writer(outdir);
    writer.write_text("chain.json", json_chain(chain));

    const int n = chain.size();
    std::string tunnel_json = "{\n  \"eps\": " + json_number(eps) + ",\n";
    tunnel_json += "  \"mu\": " + json_array(chain.mu) + ",\n";

    if (n > 1) {
        ChainPath path = simulate_chain(chain, cfg.chain_T, cfg.seed);
        tunnel_json += "  \"chain_occupation\": " + json_array(path.occupation(n)) + ",\n";
        tunnel_json += "  \"chain_T\": " + json_number(cfg.chain_T) + ",\n";
        tunnel_json += "  \"chain_jumps\": " + std::to_string(path.jumps()) + ",\n";

        // SDE side: gradient flow at the same temperature, starts spread over
        // the deep minima, occupation folded onto the coarse wells.
        SimConfig sim = cfg.sim;
        sim.record_every = 0;
        sim.x0s.clear();
        for (int j = 0; j < sim.batch; ++j) sim.x0s.push_back(chain.states[size_t(j) % n]);
        StreamingWells occ(wells, 0.1 * sim.T);
        Coefficient coeff = [eps](double) { return eps; };
        simulate(cfg.drift, coeff, ControlSource{}, sim, &occ);
        std::vector<double> frac = occ.fractions();
        std::vector<double> coarse(size_t(n), 0.0);
        for (int b = 0; b < wells.wells(); ++b)
            coarse[size_t(wells.coarse_index(wells.minima[size_t(b)]))] += frac[size_t(b)];
        tunnel_json += "  \"sde_occupation\": " + json_array(coarse) + ",\n";
        tunnel_json += "  \"sde_T\": " + json_number(sim.T) + ",\n";

        std::vector<double> hold_chain(size_t(n), 0.0), hold_physical(size_t(n), 0.0);
        const double scale = std::exp(2.0 * wells.lambda / (eps * eps));
        for (int i = 0; i < n; ++i) {
            hold_chain[size_t(i)] = 1.0 / chain.lambda[size_t(i)];
            hold_physical[size_t(i)] = scale / chain.lambda[size_t(i)];
        }
        tunnel_json += "  \"holding_rescaled\": " + json_array(hold_chain) + ",\n";
        tunnel_json += "  \"holding_physical\": " + json_array(hold_physical) + ",\n";
    } else {
        tunnel_json += "  \"chain_occupation\": [1],\n";
    }
    tunnel_json += "  \"seed\": " + std::to_string(cfg.seed) + "\n}\n";

    writer.write_text("tunnel.json", tunnel_json);
    writer.finalize("tunnel", cfg.seed);
    std::printf("tunnel: %d coarse states; wrote artifacts to %s\n", n, outdir.c_str());
    return 0;
}

std::vector<VerificationReport> dispatch_check(const std::string& name,
                                               const ExperimentConfig& cfg) {
    auto wells = [&cfg]() {
        need(cfg.has_potential, "problem.potential", "verify " + cfg.checks.front());
        return landscape_of(cfg);
    };
    if (name == "moment_bound") {
        need(cfg.has_drift, "problem.drift", "verify moment_bound");
        need(!cfg.eps.empty(), "eps", "verify moment_bound");
        return verify_moment_bound(cfg.drift, cfg.eps, cfg.sim);
    }
    if (name == "pathwise_comparison") {
        need(cfg.has_drift, "problem.drift", "verify pathwise_comparison");
        need(cfg.has_envelope, "problem.envelope", "verify pathwise_comparison");
        need(!cfg.eps.empty(), "eps", "verify pathwise_comparison");
        // The auxiliary replay needs full-resolution paths; cap the batch so
        // four stored path sets stay within memory.
        SimConfig sim = cfg.sim;
        sim.batch = std::min(sim.batch, 256);
        std::vector<VerificationReport> out;
        for (double e : cfg.eps)
            out.push_back(verify_comparison(cfg.envelope, cfg.drift, cfg.sigma, e, sim));
        return out;
    }
    if (name == "flat_error") {
        need(cfg.has_drift, "problem.drift", "verify flat_error");
        need(cfg.has_cost, "problem.cost", "verify flat_error");
        need(!cfg.grid.empty(), "problem.grid", "verify flat_error");
        need(!cfg.eps.empty(), "eps", "verify flat_error");
        // Uses the second-stage block: the noiseless flow must settle, which
        // takes a longer horizon than the coupled moment runs.
        return verify_flat_error(cfg.drift, cfg.cost, cfg.control, cfg.grid, cfg.eps,
                                 cfg.selection);
    }
    if (name == "dissipativity") {
        need(cfg.has_envelope, "problem.envelope", "verify dissipativity");
        need(!cfg.eps.empty(), "eps", "verify dissipativity");
        return verify_dissipativity(cfg.envelope, cfg.dissipativity_d, cfg.dissipativity_L,
                                    cfg.eps.front(), cfg.sim);
    }
    if (name == "exit_law") {
        need(!cfg.eps.empty(), "eps", "verify exit_law");
        need(cfg.has_potential, "problem.potential", "verify exit_law");
        return verify_exit_law(cfg.potential, landscape_of(cfg), cfg.eps, cfg.sim);
    }
    if (name == "exit_location") {
        need(!cfg.eps.empty(), "eps", "verify exit_location");
        need(cfg.has_potential, "problem.potential", "verify exit_location");
        if (cfg.exit_well < 0)
            throw ConfigError("verify.well: required by verify exit_location");
        return verify_exit_location(cfg.potential, landscape_of(cfg), cfg.exit_well, cfg.eps,
                                    cfg.sim);
    }
    if (name == "chain_limit") {
        need(cfg.has_potential, "problem.potential", "verify chain_limit");
        if (cfg.chain_eps <= 0.0)
            throw ConfigError("tunnel.eps: required by verify chain_limit");
        return verify_chain_limit(cfg.potential, landscape_of(cfg), cfg.chain_eps, cfg.sim);
    }
    if (name == "value_selection") {
        need(cfg.has_potential, "problem.potential", "verify value_selection");
        need(cfg.has_cost, "problem.cost", "verify value_selection");
        if (cfg.chain_eps <= 0.0)
            throw ConfigError("tunnel.eps: required by verify value_selection");
        return verify_value_and_selection(cfg.potential, landscape_of(cfg), cfg.cost,
                                          cfg.chain_eps, cfg.sim, cfg.selection);
    }
    if (name == "constant_sigma_gap") {
        need(cfg.has_drift, "problem.drift", "verify constant_sigma_gap");
        need(cfg.has_cost, "problem.cost", "verify constant_sigma_gap");
        need(cfg.has_envelope, "problem.envelope", "verify constant_sigma_gap");
        need(!cfg.grid.empty(), "problem.grid", "verify constant_sigma_gap");
        need(!cfg.eps.empty(), "eps", "verify constant_sigma_gap");
        return verify_constant_sigma_gap(cfg.drift, cfg.sigma, cfg.cost, cfg.envelope, cfg.control,
                                         cfg.grid, cfg.eps, cfg.cap_R);
    }
    (void)wells;
    throw ConfigError(
        "verify.checks: unknown check '" + name +
        "' (expected moment_bound, pathwise_comparison, flat_error, dissipativity, exit_law, "
        "exit_location, chain_limit, value_selection, or constant_sigma_gap)");
}

int run_verify(const ExperimentConfig& cfg, const std::string& selection,
               const std::string& outdir) {
    std::vector<std::string> names;
    if (selection == "all") {
        if (cfg.checks.empty())
            throw ConfigError("verify.checks: empty; list checks in the config or name one");
        names = cfg.checks;
    } else {
        names.push_back(selection);
    }

    std::vector<VerificationReport> reports;
    for (const auto& name : names) {
        auto batch = dispatch_check(name, cfg);
        reports.insert(reports.end(), batch.begin(), batch.end());
    }

    ArtifactWriter writer(outdir);
    writer.write_text("reports.jsonl", jsonl_reports(reports));
    std::string summary = text_summary(reports);
    writer.write_text("summary.txt", summary);
    writer.finalize("verify " + selection, cfg.seed);
    std::fputs(summary.c_str(), stdout);

    for (const auto& r : reports)
        if (!r.pass) return 3;
    return 0;
}

int run_selection_demo(const ExperimentConfig& cfg, const std::string& outdir) {
    need(cfg.has_potential, "problem.potential", "selection-demo");
    need(cfg.has_cost, "problem.cost", "selection-demo");
    if (cfg.chain_eps <= 0.0)
        throw ConfigError("tunnel.eps: required by the selection-demo command");

    std::vector<VerificationReport> reports = verify_value_and_selection(
        cfg.potential, landscape_of(cfg), cfg.cost, cfg.chain_eps, cfg.sim, cfg.selection);

    ArtifactWriter writer(outdir);
    writer.write_text("selection.jsonl", jsonl_reports(reports));
    std::string summary = text_summary(reports);
    writer.write_text("summary.txt", summary);
    writer.finalize("selection-demo", cfg.seed);
    std::fputs(summary.c_str(), stdout);

    for (const auto& r : reports)
        if (!r.pass) return 3;
    return 0;
}

// Derived views only; the producing command's manifest is left alone.
int run_report(const std::string& outdir) {
    ConsolidatedSummary sum = consolidate_reports(outdir);
    namespace fs = std::filesystem;
    std::ofstream csv(fs::path(outdir) / "summary.csv", std::ios::binary | std::ios::trunc);
    std::ofstream txt(fs::path(outdir) / "summary.txt", std::ios::binary | std::ios::trunc);
    if (!csv || !txt) throw DataError("cannot write summary files in " + outdir);
    csv << sum.table_csv;
    txt << sum.table_text;
    std::fputs(sum.table_text.c_str(), stdout);
    return sum.n_fail > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"small-noise ergodic control laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_override, verify_name = "all";
    uint64_t seed_override = 0;
    int threads = 1;
    std::vector<double> eps_override;

    app.add_option("--config,-c", config_path, "experiment file (JSON)");
    app.add_option("--out,-o", out_override, "output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed_override, "global seed override");
    app.add_option("--threads", threads, "accepted for compatibility; execution is sequential");
    app.add_option("--eps", eps_override, "noise ladder override (comma separated)")
        ->delimiter(',');

    auto* cmd_simulate = app.add_subcommand("simulate", "integrate paths, export stats");
    auto* cmd_hjb = app.add_subcommand("hjb", "solve the ergodic control problem");
    auto* cmd_landscape = app.add_subcommand("landscape", "well decomposition and Gibbs data");
    auto* cmd_tunnel = app.add_subcommand("tunnel", "limit chain and chain-vs-path comparison");
    auto* cmd_verify = app.add_subcommand("verify", "run statistical checks from the config");
    cmd_verify->add_option("name", verify_name, "check name, or 'all' for the config list");
    auto* cmd_selection = app.add_subcommand("selection-demo",
                                             "start dependence of the degenerate value");
    auto* cmd_report = app.add_subcommand("report", "consolidate reports in an output directory");
    for (auto* sub : {cmd_simulate, cmd_hjb, cmd_landscape, cmd_tunnel, cmd_verify, cmd_selection,
                      cmd_report})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*cmd_report) {
            std::string dir = out_override;
            if (dir.empty() && !config_path.empty()) dir = load_experiment(config_path).outdir;
            if (dir.empty()) throw ConfigError("--out: the report command needs a directory");
            return run_report(dir);
        }

        if (config_path.empty()) throw ConfigError("--config: required");
        ExperimentConfig cfg = load_experiment(config_path);

        if (seed_opt->count() > 0) {
            cfg.seed = seed_override;
            cfg.sim.seed = seed_override;
            cfg.selection.seed = seed_override + 1;
        }
        if (!eps_override.empty()) {
            const bool chain_derived = !cfg.eps.empty() && cfg.chain_eps == cfg.eps.back();
            cfg.eps = eps_override;
            for (double e : cfg.eps)
                if (e < 0.0) throw ConfigError("--eps: ladder entries must be >= 0");
            if (chain_derived) cfg.chain_eps = cfg.eps.back();
        }
        if (threads > 1)
            std::fprintf(stderr, "note: --threads %d accepted; modules run sequentially\n",
                         threads);
        const std::string outdir = out_override.empty() ? cfg.outdir : out_override;

        if (*cmd_simulate) return run_simulate(cfg, outdir);
        if (*cmd_hjb) return run_hjb(cfg, outdir);
        if (*cmd_landscape) return run_landscape(cfg, outdir);
        if (*cmd_tunnel) return run_tunnel(cfg, outdir);
        if (*cmd_verify) return run_verify(cfg, verify_name, outdir);
        if (*cmd_selection) return run_selection_demo(cfg, outdir);
        throw ConfigError("no command given");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
}
