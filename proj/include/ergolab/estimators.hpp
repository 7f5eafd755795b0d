#pragma once

#include <array>
#include <functional>
#include <vector>

#include "ergolab/histogram.hpp"
#include "ergolab/landscape.hpp"
#include "ergolab/model.hpp"
#include "ergolab/sde.hpp"

namespace ergolab {

/// Long-run average cost estimate with its across-trajectory dispersion.
struct ErgodicEstimate {
    double rho = 0.0;      // mean of per-trajectory time averages
    double se = 0.0;       // standard error across trajectories
    double burn_in = 0.0;  // fraction of the horizon discarded
    double T = 0.0;        // horizon the paths were run to
    int batch = 0;         // trajectories that entered the average
    int excluded = 0;      // trajectories dropped (divergence guard)
};

/// Twice-differentiable scalar test function with its derivatives.
struct TestFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> ddf;
};

/// A path restricted to the well neighborhoods, on its own excised clock.
/// `t` is cumulative time spent inside the neighborhoods (optionally put on
/// the slow tunneling clock, see extract_trace), `x` the retained states and
/// `label` the index of the hosting well in the decomposition's deep list.
struct TracePath {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<int> label;
    double duration = 0.0;
    bool empty_trace = true;
};

/// Time-average of the running cost after discarding the initial burn-in
/// fraction, averaged across trajectories. Diverged trajectories are
/// excluded and counted in `excluded`.
ErgodicEstimate ergodic_cost(const PathBatch& paths, const RunningCost& cost,
                             double burn_in = 0.2);

/// Time-occupation histogram of the recorded states after burn-in, pooled
/// over the batch and normalized to unit mass inside [x_lo, x_hi].
OccupationHistogram empirical_measure(const PathBatch& paths, int bins, double burn_in,
                                      double x_lo, double x_hi);

/// Joint state/control occupation. Controls are clamped into [u_lo, u_hi],
/// so only spatial excursions contribute to the out-of-range mass.
OccupationHistogram empirical_measure_joint(const PathBatch& paths, int bins, double burn_in,
                                            double x_lo, double x_hi, int u_bins, double u_lo,
                                            double u_hi);

/// k cubic B-spline bumps spread over (lo, hi), each compactly supported
/// strictly inside the interval, with analytic first and second derivatives.
std::vector<TestFunction> bspline_bumps(int k, double lo, double hi);

/// For each test function f, the generator average sum_b Lf(center_b) m_b
/// with Lf = (sigma^2 + eps^2)/2 f'' + m(x, u(x)) f'. The control enters
/// through the law's barycenter at each bin center; passing nullptr means
/// the uncontrolled drift. Small residuals certify approximate invariance
/// of the histogram.
std::vector<double> generator_residual(const OccupationHistogram& hist, const DriftSpec& drift,
                                       const DiffusionSpec& diffusion, const ControlLaw* law,
                                       double eps, const std::vector<TestFunction>& fs);

/// Fraction of post-burn-in time each well of the decomposition holds.
/// One entry per well (boundaries at the interior maxima); sums to 1.
std::vector<double> well_occupation(const PathBatch& paths, const WellDecomposition& wells,
                                    double burn_in = 0.2);

/// Default trace neighborhoods: intervals around each deep minimum with
/// half-width frac * (distance to the nearest saddle).
std::vector<std::array<double, 2>> default_neighborhoods(const WellDecomposition& wells,
                                                         double frac = 0.3);

/// Restriction of one trajectory to the neighborhood union. Time outside is
/// excised; the retained samples keep their step weights, so `duration` is
/// exactly the sum of retained step lengths. With `rescale` set the excised
/// clock is divided by exp(2 lambda / eps^2), mapping the slow metastable
/// hops onto an order-one clock.
TracePath extract_trace(const PathBatch& paths, int traj, const WellDecomposition& wells,
                        const std::vector<std::array<double, 2>>& neighborhoods,
                        bool rescale = false, double eps = 0.0);

/// Streaming version of ergodic_cost: feed to simulate() and finalize().
struct StreamingCost : StepObserver {
    RunningCost cost;
    double t_burn = 0.0;  // absolute time before which steps are ignored
    std::vector<double> samples;

    StreamingCost(RunningCost c, double burn_time) : cost(std::move(c)), t_burn(burn_time) {}
    void begin_traj(int, double) override { num_ = den_ = 0.0; }
    void on_step(int, double t, double x, double u, double dt) override {
        if (t < t_burn) return;
        num_ += cost.r(x, u) * dt;
        den_ += dt;
    }
    void end_traj(int, bool diverged) override {
        if (diverged || den_ <= 0.0) {
            ++excluded_;
            return;
        }
        samples.push_back(num_ / den_);
    }
    ErgodicEstimate finalize(double T, double burn_fraction) const;

  private:
    double num_ = 0.0, den_ = 0.0;
    int excluded_ = 0;
};

/// Streaming occupation histogram (marginal only).
struct StreamingHistogram : StepObserver {
    OccupationHistogram hist;
    double t_burn = 0.0;

    StreamingHistogram(int bins, double x_lo, double x_hi, double burn_time);
    void on_step(int, double t, double x, double, double dt) override;
    OccupationHistogram finalize() const;
};

/// Streaming per-well occupation times.
struct StreamingWells : StepObserver {
    const WellDecomposition* wells;
    double t_burn = 0.0;
    std::vector<double> time_in;
    double total = 0.0;

    StreamingWells(const WellDecomposition& w, double burn_time)
        : wells(&w), t_burn(burn_time), time_in(w.wells(), 0.0) {}
    void on_step(int, double t, double x, double, double dt) override {
        if (t < t_burn) return;
        time_in[wells->basin_index(x)] += dt;
        total += dt;
    }
    std::vector<double> fractions() const;
};

/// Streaming trace summary: run-length encoded label sequence, excised
/// duration, and the number of label changes. Jumps never straddle
/// trajectory boundaries.
struct StreamingTrace : StepObserver {
    std::vector<std::array<double, 2>> V;
    std::vector<std::pair<int, double>> runs;  // (deep-well label, excised time)
    double duration = 0.0;
    long jumps = 0;

    explicit StreamingTrace(std::vector<std::array<double, 2>> neighborhoods)
        : V(std::move(neighborhoods)) {}
    void begin_traj(int, double) override { current_ = -1; }
    void on_step(int, double, double x, double, double dt) override;

  private:
    int current_ = -1;
};

}  // namespace ergolab
