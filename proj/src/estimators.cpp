#include "ergolab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ergolab {

namespace {

// First recorded index at or past the burn-in time.
size_t burn_index(const std::vector<double>& t, double burn_in) {
    require(burn_in >= 0.0 && burn_in <= 0.9, "burn-in fraction must lie in [0, 0.9]");
    if (t.empty()) throw DataError("estimator: paths carry no recorded samples");
    double t0 = burn_in * t.back();
    auto it = std::lower_bound(t.begin(), t.end(), t0);
    return size_t(it - t.begin());
}

int clamp_bin(double q, double lo, double hi, int bins) {
    int b = int(std::floor((q - lo) / (hi - lo) * bins));
    return std::min(std::max(b, 0), bins - 1);
}

}  // namespace

ErgodicEstimate ergodic_cost(const PathBatch& paths, const RunningCost& cost, double burn_in) {
    size_t k0 = burn_index(paths.t, burn_in);
    size_t n = paths.t.size();
    if (k0 + 1 >= n) throw DataError("estimator: burn-in leaves no averaging window");

    MeanVar mv;
    int excluded = 0;
    for (int j = 0; j < paths.batch(); ++j) {
        if (paths.diverged[j]) {
            ++excluded;
            continue;
        }
        double num = 0.0, den = 0.0;
        for (size_t k = k0; k + 1 < n; ++k) {
            double w = paths.t[k + 1] - paths.t[k];
            num += cost.r(paths.x[j][k], paths.u[j][k]) * w;
            den += w;
        }
        mv.add(num / den);
    }
    if (mv.n == 0) throw DataError("estimator: every trajectory hit the divergence guard");

    ErgodicEstimate est;
    est.rho = mv.mean;
    est.se = mv.se();
    est.burn_in = burn_in;
    est.T = paths.t.back();
    est.batch = int(mv.n);
    est.excluded = excluded;
    return est;
}

namespace {

OccupationHistogram measure_impl(const PathBatch& paths, int bins, double burn_in, double x_lo,
                                 double x_hi, int u_bins, double u_lo, double u_hi) {
    require(bins >= 1, "histogram needs at least one bin");
    require(x_hi > x_lo, "histogram range must be nonempty");
    size_t k0 = burn_index(paths.t, burn_in);
    size_t n = paths.t.size();
    if (k0 + 1 >= n) throw DataError("estimator: burn-in leaves no averaging window");

    OccupationHistogram h;
    h.edges = linspace(x_lo, x_hi, bins + 1);
    h.mass.assign(bins, 0.0);
    if (u_bins > 0) {
        require(u_hi > u_lo, "control axis range must be nonempty");
        h.u_edges = linspace(u_lo, u_hi, u_bins + 1);
        h.joint.assign(size_t(bins) * u_bins, 0.0);
    }

    int used = 0;
    for (int j = 0; j < paths.batch(); ++j) {
        if (paths.diverged[j]) continue;
        ++used;
        for (size_t k = k0; k + 1 < n; ++k) {
            double w = paths.t[k + 1] - paths.t[k];
            double x = paths.x[j][k];
            if (x < x_lo || x > x_hi) {
                h.out_mass += w;
                continue;
            }
            int b = clamp_bin(x, x_lo, x_hi, bins);
            h.mass[b] += w;
            if (u_bins > 0) {
                int ub = clamp_bin(paths.u[j][k], u_lo, u_hi, u_bins);
                h.joint[size_t(b) * u_bins + ub] += w;
            }
        }
    }
    if (used == 0) throw DataError("estimator: every trajectory hit the divergence guard");
    h.normalize();
    return h;
}

}  // namespace

OccupationHistogram empirical_measure(const PathBatch& paths, int bins, double burn_in,
                                      double x_lo, double x_hi) {
    return measure_impl(paths, bins, burn_in, x_lo, x_hi, 0, 0.0, 0.0);
}

OccupationHistogram empirical_measure_joint(const PathBatch& paths, int bins, double burn_in,
                                            double x_lo, double x_hi, int u_bins, double u_lo,
                                            double u_hi) {
    require(u_bins >= 1, "control axis needs at least one bin");
    return measure_impl(paths, bins, burn_in, x_lo, x_hi, u_bins, u_lo, u_hi);
}

namespace {

// Cubic B-spline bump on [-2, 2], unit knot spacing, peak 2/3 at 0.
double bspline(double s) {
    s = std::fabs(s);
    if (s >= 2.0) return 0.0;
    if (s >= 1.0) {
        double q = 2.0 - s;
        return q * q * q / 6.0;
    }
    return 2.0 / 3.0 - s * s + s * s * s / 2.0;
}

double bspline_d1(double s) {
    double a = std::fabs(s), sign = s < 0.0 ? -1.0 : 1.0;
    if (a >= 2.0) return 0.0;
    if (a >= 1.0) {
        double q = 2.0 - a;
        return sign * (-q * q / 2.0);
    }
    return sign * (-2.0 * a + 1.5 * a * a);
}

double bspline_d2(double s) {
    double a = std::fabs(s);
    if (a >= 2.0) return 0.0;
    if (a >= 1.0) return 2.0 - a;
    return -2.0 + 3.0 * a;
}

}  // namespace

std::vector<TestFunction> bspline_bumps(int k, double lo, double hi) {
    require(k >= 1, "need at least one test function");
    require(hi > lo, "test-function interval must be nonempty");
    std::vector<TestFunction> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        double c = lo + (i + 1) * (hi - lo) / (k + 1);
        double w = 0.45 * std::min(c - lo, hi - c);
        out.push_back({[c, w](double x) { return bspline((x - c) / w); },
                       [c, w](double x) { return bspline_d1((x - c) / w) / w; },
                       [c, w](double x) { return bspline_d2((x - c) / w) / (w * w); }});
    }
    return out;
}

std::vector<double> generator_residual(const OccupationHistogram& hist, const DriftSpec& drift,
                                       const DiffusionSpec& diffusion, const ControlLaw* law,
                                       double eps, const std::vector<TestFunction>& fs) {
    std::vector<double> res;
    res.reserve(fs.size());
    for (const auto& f : fs) {
        double acc = 0.0;
        for (int b = 0; b < hist.bins(); ++b) {
            if (hist.mass[b] == 0.0) continue;
            double c = hist.center(b);
            double s = diffusion.sigma(c);
            double a = s * s + eps * eps;
            double u = law ? law->barycenter(c) : 0.0;
            acc += hist.mass[b] * (0.5 * a * f.ddf(c) + drift.m(c, u) * f.df(c));
        }
        res.push_back(acc);
    }
    return res;
}

std::vector<double> well_occupation(const PathBatch& paths, const WellDecomposition& wells,
                                    double burn_in) {
    size_t k0 = burn_index(paths.t, burn_in);
    size_t n = paths.t.size();
    if (k0 + 1 >= n) throw DataError("estimator: burn-in leaves no averaging window");

    std::vector<double> time_in(wells.wells(), 0.0);
    int used = 0;
    for (int j = 0; j < paths.batch(); ++j) {
        if (paths.diverged[j]) continue;
        ++used;
        for (size_t k = k0; k + 1 < n; ++k)
            time_in[wells.basin_index(paths.x[j][k])] += paths.t[k + 1] - paths.t[k];
    }
    if (used == 0) throw DataError("estimator: every trajectory hit the divergence guard");
    double total = 0.0;
    for (double v : time_in) total += v;
    if (total <= 0.0) throw DataError("estimator: no samples past the burn-in time");
    for (double& v : time_in) v /= total;
    return time_in;
}

std::vector<std::array<double, 2>> default_neighborhoods(const WellDecomposition& wells,
                                                         double frac) {
    require(frac > 0.0 && frac < 1.0, "neighborhood fraction must lie in (0, 1)");
    require(!wells.deep.empty(), "deep wells not computed for this decomposition");
    std::vector<std::array<double, 2>> V;
    V.reserve(wells.deep.size());
    for (int d : wells.deep) {
        double xm = wells.minima[d];
        double dist = std::numeric_limits<double>::infinity();
        for (double y : wells.maxima) dist = std::min(dist, std::fabs(xm - y));
        require(std::isfinite(dist), "no saddle to scale the neighborhood by");
        V.push_back({xm - frac * dist, xm + frac * dist});
    }
    return V;
}

TracePath extract_trace(const PathBatch& paths, int traj, const WellDecomposition& wells,
                        const std::vector<std::array<double, 2>>& neighborhoods, bool rescale,
                        double eps) {
    require(traj >= 0 && traj < paths.batch(), "trajectory index out of range");
    require(!neighborhoods.empty(), "need at least one neighborhood");
    if (rescale) require(eps > 0.0, "time rescaling needs a positive noise level");

    TracePath tr;
    size_t n = paths.t.size();
    for (size_t k = 0; k < n; ++k) {
        double x = paths.x[traj][k];
        int label = -1;
        for (size_t i = 0; i < neighborhoods.size(); ++i) {
            if (x >= neighborhoods[i][0] && x <= neighborhoods[i][1]) {
                label = int(i);
                break;
            }
        }
        if (label < 0) continue;
        tr.t.push_back(tr.duration);
        tr.x.push_back(x);
        tr.label.push_back(label);
        if (k + 1 < n) tr.duration += paths.t[k + 1] - paths.t[k];
    }
    tr.empty_trace = tr.t.empty();
    if (rescale && !tr.empty_trace) {
        double factor = std::exp(-2.0 * wells.lambda / (eps * eps));
        for (double& tau : tr.t) tau *= factor;
        tr.duration *= factor;
    }
    return tr;
}

ErgodicEstimate StreamingCost::finalize(double T, double burn_fraction) const {
    if (samples.empty()) throw DataError("estimator: every trajectory hit the divergence guard");
    MeanVar mv;
    for (double s : samples) mv.add(s);
    ErgodicEstimate est;
    est.rho = mv.mean;
    est.se = mv.se();
    est.burn_in = burn_fraction;
    est.T = T;
    est.batch = int(mv.n);
    est.excluded = excluded_;
    return est;
}

StreamingHistogram::StreamingHistogram(int bins, double x_lo, double x_hi, double burn_time)
    : t_burn(burn_time) {
    require(bins >= 1, "histogram needs at least one bin");
    require(x_hi > x_lo, "histogram range must be nonempty");
    hist.edges = linspace(x_lo, x_hi, bins + 1);
    hist.mass.assign(bins, 0.0);
}

void StreamingHistogram::on_step(int, double t, double x, double, double dt) {
    if (t < t_burn) return;
    double lo = hist.edges.front(), hi = hist.edges.back();
    if (x < lo || x > hi) {
        hist.out_mass += dt;
        return;
    }
    hist.mass[clamp_bin(x, lo, hi, hist.bins())] += dt;
}

OccupationHistogram StreamingHistogram::finalize() const {
    OccupationHistogram h = hist;
    h.normalize();
    return h;
}

std::vector<double> StreamingWells::fractions() const {
    double sum = 0.0;
    for (double v : time_in) sum += v;
    if (sum <= 0.0) throw DataError("estimator: no samples past the burn-in time");
    std::vector<double> f = time_in;
    for (double& v : f) v /= sum;
    return f;
}

void StreamingTrace::on_step(int, double, double x, double, double dt) {
    int label = -1;
    for (size_t i = 0; i < V.size(); ++i) {
        if (x >= V[i][0] && x <= V[i][1]) {
            label = int(i);
            break;
        }
    }
    if (label < 0) return;
    if (label != current_) {
        if (current_ >= 0) ++jumps;
        runs.push_back({label, 0.0});
        current_ = label;
    }
    runs.back().second += dt;
    duration += dt;
}

}  // namespace ergolab
