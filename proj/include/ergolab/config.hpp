#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/hjb.hpp"
#include "ergolab/model.hpp"
#include "ergolab/sde.hpp"

namespace ergolab {

/// Fully parsed experiment description: one self-describing JSON file per
/// experiment. Commands read the blocks they need; optional blocks keep
/// their defaults, with presence recorded where a command must distinguish.
struct ExperimentConfig {
    // problem definition
    Potential1D potential;
    bool has_potential = false;
    DriftSpec drift;
    bool has_drift = false;
    DiffusionSpec sigma;
    ControlSet control = ControlSet::make(-1.0, 1.0, 3);
    RunningCost cost;
    bool has_cost = false;
    BoundingFields envelope;
    bool has_envelope = false;
    std::vector<double> grid;  // uniform state grid for solves and quadrature

    // command blocks
    SimConfig sim;
    SimConfig selection;       // heavier second-stage batch; defaults to sim
    std::vector<double> eps;   // noise ladder
    HjbOptions hjb;
    std::vector<std::string> checks;  // verification selection for this bundle
    double dissipativity_d = 1.0;
    double dissipativity_L = 0.0;
    double cap_R = 1.0;
    int exit_well = -1;        // interior well index for exit-side checks
    double chain_eps = 0.0;    // temperature for chain-limit comparisons
    double chain_T = 100.0;    // horizon for the sampled chain path

    uint64_t seed = 1;
    std::string outdir = "out";
};

/// Loads and validates an experiment file. Validation failures throw
/// ConfigError naming the offending field path (e.g. "sim.dt: must be > 0").
ExperimentConfig load_experiment(const std::string& path);

/// Same, from an in-memory JSON document; `origin` names the source in
/// diagnostics.
ExperimentConfig parse_experiment(const std::string& text, const std::string& origin);

}  // namespace ergolab
