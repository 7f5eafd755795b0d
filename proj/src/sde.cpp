#include "ergolab/sde.hpp"

#include <algorithm>
#include <cmath>

#include "ergolab/rng.hpp"

namespace ergolab {

void SimConfig::validate() const {
    require(dt > 0.0, "sim config: dt must be positive");
    require(T >= dt, "sim config: horizon shorter than one step");
    require(batch >= 1, "sim config: batch must be at least 1");
    require(record_every >= 0, "sim config: record_every must be nonnegative");
    require(guard_lo < guard_hi, "sim config: empty guard interval");
}

int PathBatch::alive() const {
    int n = 0;
    for (uint8_t d : diverged) n += d == 0;
    return n;
}

namespace {

// Drift compiled to allocation-free evaluators for the hot loop.
struct CompiledDrift {
    enum class Kind { Poly, Pieces, Custom } kind;
    std::vector<double> base;  // -V' or the affine base, ascending coeffs
    std::vector<std::pair<double, std::vector<double>>> pieces;  // (lo, -V' coeffs)
    const DriftSpec* spec = nullptr;

    static CompiledDrift make(const DriftSpec& d) {
        CompiledDrift c;
        c.spec = &d;
        switch (d.kind) {
            case DriftSpec::Kind::GradientFlow:
                if (d.potential.pieces.empty()) {
                    c.kind = Kind::Poly;
                    c.base = polyder(d.potential.coeffs);
                    for (double& v : c.base) v = -v;
                } else {
                    c.kind = Kind::Pieces;
                    for (const auto& p : d.potential.pieces) {
                        auto dc = polyder(p.coeffs);
                        for (double& v : dc) v = -v;
                        c.pieces.emplace_back(p.lo, std::move(dc));
                    }
                }
                break;
            case DriftSpec::Kind::PolyAffine:
                c.kind = Kind::Poly;
                c.base = d.base_coeffs;
                break;
            case DriftSpec::Kind::Custom:
                c.kind = Kind::Custom;
                break;
        }
        return c;
    }

    double operator()(double x, double u) const {
        switch (kind) {
            case Kind::Poly: return polyval(base, x) + u;
            case Kind::Pieces: {
                size_t i = pieces.size() - 1;
                while (i > 0 && x < pieces[i].first) --i;
                return polyval(pieces[i].second, x) + u;
            }
            case Kind::Custom: return spec->m(x, u);
        }
        return 0.0;
    }
};

struct Recorder {
    PathBatch* out = nullptr;
    int every = 1;

    void init(const SimConfig& cfg, PathBatch& batch) {
        out = &batch;
        every = cfg.record_every;
        batch.dt = cfg.dt;
        batch.diverged.assign(cfg.batch, 0);
        batch.seeds.resize(cfg.batch);
        for (int j = 0; j < cfg.batch; ++j) batch.seeds[j] = trajectory_seed(cfg.seed, j);
        if (every <= 0) return;
        int n = cfg.steps();
        for (int k = 0; k <= n; k += every) out->t.push_back(k * cfg.dt);
        if ((n % every) != 0) out->t.push_back(n * cfg.dt);
        out->x.assign(cfg.batch, std::vector<double>(out->t.size(), 0.0));
        out->u.assign(cfg.batch, std::vector<double>(out->t.size(), 0.0));
    }

    bool wants(int k, int n) const { return every > 0 && (k % every == 0 || k == n); }
    int slot(int k, int n) const {
        return k == n && (n % every) != 0 ? int(out->t.size()) - 1 : k / every;
    }
};

}  // namespace

PathBatch simulate(const DriftSpec& drift, const Coefficient& sigma, const ControlSource& control,
                   const SimConfig& cfg, StepObserver* obs) {
    cfg.validate();
    PathBatch batch;
    Recorder rec;
    rec.init(cfg, batch);
    CompiledDrift m = CompiledDrift::make(drift);
    const int n = cfg.steps();
    const double sdt = std::sqrt(cfg.dt);

    for (int j = 0; j < cfg.batch; ++j) {
        Rng rng(batch.seeds[j]);
        double x = cfg.start(j);
        if (obs) obs->begin_traj(j, x);
        bool bad = false;
        for (int k = 0; k < n; ++k) {
            double t = k * cfg.dt;
            double u = control.eval(k, t, x);
            if (rec.wants(k, n)) {
                int s = rec.slot(k, n);
                batch.x[j][s] = x;
                batch.u[j][s] = u;
            }
            if (obs) obs->on_step(j, t, x, u, cfg.dt);
            x += m(x, u) * cfg.dt + sigma(x) * sdt * rng.normal();
            if (!(x >= cfg.guard_lo && x <= cfg.guard_hi)) {
                bad = true;
                // Freeze the remaining recorded slots at the last finite state.
                if (rec.every > 0)
                    for (int kk = k + 1; kk <= n; ++kk)
                        if (rec.wants(kk, n)) {
                            int s = rec.slot(kk, n);
                            batch.x[j][s] = x;
                            batch.u[j][s] = u;
                        }
                break;
            }
        }
        if (!bad && rec.wants(n, n)) {
            int s = rec.slot(n, n);
            batch.x[j][s] = x;
            batch.u[j][s] = control.eval(n, n * cfg.dt, x);
        }
        batch.diverged[j] = bad ? 1 : 0;
        if (obs) obs->end_traj(j, bad);
    }
    return batch;
}

std::pair<PathBatch, PathBatch> simulate_coupled(const DriftSpec& driftA, const Coefficient& sigmaA,
                                                 const DriftSpec& driftB, const Coefficient& sigmaB,
                                                 const ControlStream& control,
                                                 const SimConfig& cfg) {
    cfg.validate();
    if (cfg.noise != SimConfig::Noise::Shared)
        throw ConfigError("coupled simulation requires shared-noise mode");
    PathBatch A, B;
    Recorder ra, rb;
    ra.init(cfg, A);
    rb.init(cfg, B);
    CompiledDrift mA = CompiledDrift::make(driftA);
    CompiledDrift mB = CompiledDrift::make(driftB);
    const int n = cfg.steps();
    const double sdt = std::sqrt(cfg.dt);

    for (int j = 0; j < cfg.batch; ++j) {
        Rng rng(A.seeds[j]);
        double xa = cfg.start(j), xb = cfg.start(j);
        bool bad = false;
        for (int k = 0; k < n; ++k) {
            double t = k * cfg.dt;
            double u = control ? control(k, t) : 0.0;
            if (ra.wants(k, n)) {
                int s = ra.slot(k, n);
                A.x[j][s] = xa;
                A.u[j][s] = u;
                B.x[j][s] = xb;
                B.u[j][s] = u;
            }
            double xi = rng.normal();
            xa += mA(xa, u) * cfg.dt + sigmaA(xa) * sdt * xi;
            xb += mB(xb, u) * cfg.dt + sigmaB(xb) * sdt * xi;
            bool ina = xa >= cfg.guard_lo && xa <= cfg.guard_hi;
            bool inb = xb >= cfg.guard_lo && xb <= cfg.guard_hi;
            if (!ina || !inb) {
                bad = true;
                if (ra.every > 0)
                    for (int kk = k + 1; kk <= n; ++kk)
                        if (ra.wants(kk, n)) {
                            int s = ra.slot(kk, n);
                            A.x[j][s] = xa;
                            B.x[j][s] = xb;
                            A.u[j][s] = u;
                            B.u[j][s] = u;
                        }
                break;
            }
        }
        if (!bad && ra.wants(n, n)) {
            int s = ra.slot(n, n);
            double u = control ? control(n, n * cfg.dt) : 0.0;
            A.x[j][s] = xa;
            A.u[j][s] = u;
            B.x[j][s] = xb;
            B.u[j][s] = u;
        }
        A.diverged[j] = B.diverged[j] = bad ? 1 : 0;
    }
    return {A, B};
}

std::pair<PathBatch, PathBatch> simulate_auxiliary(const BoundingFields& bounds,
                                                   const DiffusionSpec& sigma,
                                                   const PathBatch& path_eps,
                                                   const PathBatch& path_lim, double eps,
                                                   const SimConfig& cfg) {
    if (path_eps.t.size() != path_lim.t.size() || path_eps.t != path_lim.t ||
        path_eps.dt != path_lim.dt)
        throw ConfigError("auxiliary simulation: coupled batches on different time grids");
    if (path_eps.t.size() < 2) throw ConfigError("auxiliary simulation: empty paths");
    // Replay needs every integrator step recorded.
    for (size_t k = 1; k < path_eps.t.size(); ++k)
        if (std::fabs(path_eps.t[k] - path_eps.t[k - 1] - path_eps.dt) > 1e-12)
            throw ConfigError("auxiliary simulation: paths must be recorded at full resolution");

    const int n = int(path_eps.t.size()) - 1;
    const double dt = path_eps.dt;
    const double sdt = std::sqrt(dt);
    PathBatch Y1, Y2;
    for (PathBatch* Y : {&Y1, &Y2}) {
        Y->t = path_eps.t;
        Y->dt = dt;
        Y->seeds = path_eps.seeds;
        Y->diverged = path_eps.diverged;
        Y->x.assign(path_eps.batch(), std::vector<double>(n + 1, 0.0));
        Y->u.assign(path_eps.batch(), std::vector<double>(n + 1, 0.0));
    }
    for (int j = 0; j < path_eps.batch(); ++j) {
        Rng rng(path_eps.seeds[j]);  // same ladder: identical increment stream
        double y1 = path_eps.x[j][0] - path_lim.x[j][0];
        double y2 = y1;
        Y1.x[j][0] = y1;
        Y2.x[j][0] = y2;
        for (int k = 0; k < n; ++k) {
            double g = sigma.sigma(path_eps.x[j][k]) - sigma.sigma(path_lim.x[j][k]) +
                       eps * bounds.sigma_hat0;
            double xi = rng.normal();
            y1 += bounds.b1_at(y1) * dt + g * sdt * xi;
            y2 += bounds.b2_at(y2) * dt + g * sdt * xi;
            Y1.x[j][k + 1] = y1;
            Y2.x[j][k + 1] = y2;
        }
    }
    (void)cfg;
    return {Y1, Y2};
}

std::vector<ExitSample> first_exit(const DriftSpec& drift, const Coefficient& sigma,
                                   const ControlSource& control, double a, double b,
                                   const SimConfig& cfg) {
    cfg.validate();
    require(a < b, "first exit: empty interval");
    CompiledDrift m = CompiledDrift::make(drift);
    const int n = cfg.steps();
    const double sdt = std::sqrt(cfg.dt);
    std::vector<ExitSample> out;
    out.reserve(cfg.batch);
    for (int j = 0; j < cfg.batch; ++j) {
        double x = cfg.start(j);
        require(x > a && x < b, "first exit: start must lie strictly inside the interval");
        Rng rng(trajectory_seed(cfg.seed, j));
        ExitSample s;
        s.traj = j;
        s.censored = true;
        for (int k = 1; k <= n; ++k) {
            double t = (k - 1) * cfg.dt;
            double u = control.eval(k - 1, t, x);
            x += m(x, u) * cfg.dt + sigma(x) * sdt * rng.normal();
            if (x <= a || x >= b) {
                s.tau = k * cfg.dt;
                s.side = x <= a ? -1 : +1;
                s.location = x;
                s.censored = false;
                break;
            }
        }
        if (s.censored) {
            s.tau = n * cfg.dt;
            s.side = 0;
            s.location = x;
        }
        out.push_back(s);
    }
    return out;
}

std::vector<std::vector<double>> simulate_nd(int dim, const DriftND& drift, const SigmaND& sigma,
                                             const std::vector<double>& x0, const SimConfig& cfg,
                                             int traj_index) {
    cfg.validate();
    require(int(x0.size()) == dim, "nd simulation: initial point has wrong dimension");
    const int n = cfg.steps();
    const double sdt = std::sqrt(cfg.dt);
    Rng rng(trajectory_seed(cfg.seed, traj_index));
    std::vector<double> x = x0, mx(dim);
    std::vector<std::vector<double>> sx(dim, std::vector<double>(dim));
    std::vector<double> xi(dim);
    std::vector<std::vector<double>> out;
    out.reserve(size_t(n / std::max(1, cfg.record_every)) + 2);
    out.push_back(x);
    for (int k = 0; k < n; ++k) {
        drift(x, mx);
        sigma(x, sx);
        for (int i = 0; i < dim; ++i) xi[i] = rng.normal();
        for (int i = 0; i < dim; ++i) {
            double noise = 0.0;
            for (int l = 0; l < dim; ++l) noise += sx[i][l] * xi[l];
            x[i] += mx[i] * cfg.dt + noise * sdt;
        }
        if (cfg.record_every > 0 && ((k + 1) % cfg.record_every == 0 || k + 1 == n))
            out.push_back(x);
    }
    return out;
}

}  // namespace ergolab
