#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ergolab/model.hpp"

namespace ergolab {

/// Euler scheme configuration. Guards bound the admissible region; a state
/// leaving [guard_lo, guard_hi] flags its trajectory as diverged.
struct SimConfig {
    double dt = 1e-3;
    double T = 1.0;
    int batch = 1;
    uint64_t seed = 1;
    double x0 = 0.0;
    std::vector<double> x0s;  // optional per-trajectory starts (overrides x0)
    enum class Noise { Independent, Shared };
    Noise noise = Noise::Independent;
    double guard_lo = -1e100, guard_hi = 1e100;
    // Record every k-th step into the PathBatch; 0 disables path storage
    // (observers still see every step).
    int record_every = 1;

    void validate() const;
    int steps() const { return int(T / dt + 0.5); }
    double start(int j) const { return x0s.empty() ? x0 : x0s[size_t(j) % x0s.size()]; }
};

/// Materialized batch of trajectories on a common (possibly thinned) time
/// grid, with the applied control stream and the seed ladder that reproduces
/// the batch bit-exactly.
struct PathBatch {
    std::vector<double> t;
    std::vector<std::vector<double>> x;  // [traj][recorded step]
    std::vector<std::vector<double>> u;  // control applied at the recorded state
    std::vector<uint64_t> seeds;
    std::vector<uint8_t> diverged;
    double dt = 0.0;  // underlying integrator step

    int batch() const { return int(x.size()); }
    int alive() const;
};

/// First-exit record for one trajectory. side: -1 left, +1 right, 0 censored.
struct ExitSample {
    int traj = 0;
    double tau = 0.0;
    int side = 0;
    double location = 0.0;
    bool censored = false;
};

/// Streaming hook: sees every raw step of every trajectory, including the
/// initial state (step_t = 0). Used for long horizons where storing paths is
/// not affordable.
struct StepObserver {
    virtual void begin_traj(int traj, double x0) { (void)traj, (void)x0; }
    // State x at time t, control u applied over [t, t+dt).
    virtual void on_step(int traj, double t, double x, double u, double dt) = 0;
    virtual void end_traj(int traj, bool diverged) { (void)traj, (void)diverged; }
    virtual ~StepObserver() = default;
};

/// Control sources for the integrator: a Markov law (nearest-node lookup) or
/// a prescribed per-step stream u(step, t).
using ControlStream = std::function<double(int step, double t)>;

struct ControlSource {
    const ControlLaw* law = nullptr;
    ControlStream stream;  // used when law is null
    double constant = 0.0; // used when neither law nor stream is set

    double eval(int step, double t, double x) const {
        if (law) return law->barycenter(x);
        if (stream) return stream(step, t);
        return constant;
    }
};

/// Euler-Maruyama batch: X_{k+1} = X_k + m(X_k,U_k) dt + s(X_k) sqrt(dt) xi_k.
/// The diffusion coefficient is sigma_mode-dependent; pass the coefficient as
/// a callable to keep perturbation choices at the call site.
using Coefficient = std::function<double(double)>;

PathBatch simulate(const DriftSpec& drift, const Coefficient& sigma, const ControlSource& control,
                   const SimConfig& cfg, StepObserver* obs = nullptr);

/// Two systems stepped with identical Gaussian increments and an identical
/// prescribed control stream. Requires shared-noise mode.
std::pair<PathBatch, PathBatch> simulate_coupled(const DriftSpec& driftA, const Coefficient& sigmaA,
                                                 const DriftSpec& driftB, const Coefficient& sigmaB,
                                                 const ControlStream& control,
                                                 const SimConfig& cfg);

/// Auxiliary comparison pair: dY_i = b_i(Y_i) dt + g_k dW with the coefficient
/// g_k = sigma(X_eps_k) - sigma(X_k) + eps*sigma_hat(0) replayed against the
/// same increments the coupled batch consumed (reconstructed from its seed
/// ladder). Y_1(0) = Y_2(0) = X_eps(0) - X(0). Requires full-resolution paths
/// on a common grid.
std::pair<PathBatch, PathBatch> simulate_auxiliary(const BoundingFields& bounds,
                                                   const DiffusionSpec& sigma,
                                                   const PathBatch& path_eps,
                                                   const PathBatch& path_lim, double eps,
                                                   const SimConfig& cfg);

/// First exit from (a, b): per trajectory the first grid time with X outside,
/// censored at the horizon. Simulation short-circuits at exit.
std::vector<ExitSample> first_exit(const DriftSpec& drift, const Coefficient& sigma,
                                   const ControlSource& control, double a, double b,
                                   const SimConfig& cfg);

/// Generic d-dimensional Euler step loop for custom systems (verification
/// paths only; no landscape analysis in d > 1). Noise is d independent
/// channels scaled by a state-dependent matrix.
using DriftND = std::function<void(const std::vector<double>&, std::vector<double>&)>;
using SigmaND = std::function<void(const std::vector<double>&, std::vector<std::vector<double>>&)>;

std::vector<std::vector<double>> simulate_nd(int dim, const DriftND& drift, const SigmaND& sigma,
                                             const std::vector<double>& x0, const SimConfig& cfg,
                                             int traj_index = 0);

}  // namespace ergolab
