#include "ergolab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerate = 1e-6;  // |V''| below this rejects the landscape

double bisect(const std::function<double(double)>& f, double a, double b, double fa) {
    for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fa < 0) == (fm < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

int WellDecomposition::coarse_index(double q) const {
    int i = 0;
    while (i < int(separators.size()) && q >= separators[i]) ++i;
    return i;
}

int WellDecomposition::basin_index(double q) const {
    int i = 0;
    while (i < int(maxima.size()) && q >= maxima[i]) ++i;
    return i;
}

void WellDecomposition::check_interlacing() const {
    require(!minima.empty(), "landscape: no minima");
    require(maxima.size() + 1 == minima.size(), "landscape: wells and saddles not interlaced");
    for (size_t i = 0; i < maxima.size(); ++i)
        require(minima[i] < maxima[i] && maxima[i] < minima[i + 1],
                "landscape: wells and saddles not interlaced");
    for (double c : min_curv)
        require(c > 0.0, "landscape: minimum with nonpositive curvature");
    for (double c : max_curv)
        require(c < 0.0, "landscape: saddle with nonnegative curvature");
}

WellDecomposition find_critical_points(const PotentialView& V, double lo, double hi, int grid_n) {
    require(lo < hi && grid_n >= 10, "landscape: bad search interval");
    std::vector<double> roots;
    double h = (hi - lo) / grid_n;
    double prev_x = lo, prev_d = V.dv(lo);
    for (int i = 1; i <= grid_n; ++i) {
        double x = lo + h * i;
        double d = V.dv(x);
        if (prev_d == 0.0) {
            roots.push_back(prev_x);
        } else if (d != 0.0 && (prev_d < 0) != (d < 0)) {
            roots.push_back(bisect(V.dv, prev_x, x, prev_d));
        }
        prev_x = x;
        prev_d = d;
    }
    if (prev_d == 0.0) roots.push_back(prev_x);

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [&](double a, double b) { return std::fabs(a - b) < 2e-9 * (hi - lo); }),
                roots.end());

    WellDecomposition d;
    for (double r : roots) {
        double c = V.ddv(r);
        if (std::fabs(c) < kDegenerate)
            throw DataError("landscape: degenerate critical point (second derivative ~ 0)");
        if (c > 0) {
            d.minima.push_back(r);
            d.min_value.push_back(V.v(r));
            d.min_curv.push_back(c);
        } else {
            d.maxima.push_back(r);
            d.max_value.push_back(V.v(r));
            d.max_curv.push_back(c);
        }
    }
    if (d.minima.empty()) throw DataError("landscape: no minima on the interval");
    try {
        d.check_interlacing();
    } catch (const ParamError& e) {
        throw DataError(e.what());
    }
    return d;
}

void depths_and_wells(WellDecomposition& d) {
    d.check_interlacing();
    int n = d.wells();
    d.depth_left.assign(n, kInf);
    d.depth_right.assign(n, kInf);
    d.lambda_i.assign(n, kInf);
    d.has_metastability = n > 1;
    if (n == 1) {
        d.lambda_i.clear();
        return;
    }
    for (int i = 0; i < n; ++i) {
        if (i > 0) d.depth_left[i] = d.max_value[i - 1] - d.min_value[i];
        if (i < n - 1) d.depth_right[i] = d.max_value[i] - d.min_value[i];
        double depth = std::min(d.depth_left[i], d.depth_right[i]);
        require(depth > 0.0, "landscape: nonpositive well depth");
        d.lambda_i[i] = 0.5 * depth;
    }
}

void deep_wells(WellDecomposition& d) {
    require(d.has_metastability, "landscape: deep wells undefined without a saddle");
    double lmax = *std::max_element(d.lambda_i.begin(), d.lambda_i.end());
    d.lambda = lmax;
    d.deep.clear();
    for (int i = 0; i < d.wells(); ++i)
        if (d.lambda_i[i] >= lmax * (1.0 - 1e-12)) d.deep.push_back(i);

    d.separators.clear();
    for (size_t k = 0; k + 1 < d.deep.size(); ++k) {
        int a = d.deep[k], b = d.deep[k + 1];
        // Saddles with indices a..b-1 lie between minima a and b; the highest
        // separates the coarse wells, ties resolved to the leftmost.
        int best = a;
        for (int j = a + 1; j < b; ++j)
            if (d.max_value[j] > d.max_value[best] * (1.0) +
                                     1e-12 * std::max(1.0, std::fabs(d.max_value[best])))
                best = j;
        d.separators.push_back(d.maxima[best]);
    }
}

WellDecomposition analyze_landscape(const PotentialView& V, double lo, double hi, int grid_n) {
    WellDecomposition d = find_critical_points(V, lo, hi, grid_n);
    depths_and_wells(d);
    if (d.has_metastability) deep_wells(d);
    return d;
}

LaplaceData laplace_partition(const WellDecomposition& d, double eps) {
    require(eps > 0.0, "laplace: eps must be positive");
    require(!d.deep.empty(), "laplace: deep wells not computed");
    LaplaceData out;
    out.eps = eps;
    out.partition = 0.0;
    std::vector<double> w;
    for (int i : d.deep) {
        w.push_back(1.0 / std::sqrt(d.min_curv[i]));
        out.partition += std::sqrt(M_PI) * eps *
                         std::exp(-2.0 * d.min_value[i] / (eps * eps)) / std::sqrt(d.min_curv[i]);
    }
    out.C = 0.0;
    for (double wi : w) out.C += wi;
    for (double wi : w) out.mass.push_back(wi / out.C);
    return out;
}

GibbsResult gibbs_quadrature(const PotentialView& V, double eps, double lo, double hi, int bins) {
    require(eps > 0.0, "gibbs: eps must be positive");
    require(bins >= 2 && lo < hi, "gibbs: bad histogram layout");
    const int sub = 8;  // Simpson nodes per bin (sub cells)
    int n = bins * sub + 1;
    double h = (hi - lo) / (n - 1);
    std::vector<double> vs(n);
    double vmin = kInf;
    for (int i = 0; i < n; ++i) {
        vs[i] = V.v(lo + h * i);
        vmin = std::min(vmin, vs[i]);
    }
    GibbsResult out;
    out.v_min = vmin;
    out.hist.edges = linspace(lo, hi, bins + 1);
    out.hist.mass.assign(bins, 0.0);
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        double s = 0.0;
        for (int k = 0; k <= sub; ++k) {
            double f = std::exp(-2.0 * (vs[b * sub + k] - vmin) / (eps * eps));
            double wgt = (k == 0 || k == sub) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            s += wgt * f;
        }
        out.hist.mass[b] = s * h / 3.0;
        total += out.hist.mass[b];
    }
    out.partition = total * std::exp(-2.0 * vmin / (eps * eps));
    out.hist.normalize();
    return out;
}

double QuasiPotentialCurve::at(double q) const {
    if (q <= x.front()) return v.front();
    if (q >= x.back()) return v.back();
    auto it = std::upper_bound(x.begin(), x.end(), q);
    int i = int(it - x.begin()) - 1;
    double t = (q - x[i]) / (x[i + 1] - x[i]);
    return (1 - t) * v[i] + t * v[i + 1];
}

QuasiPotentialCurve quasi_potential_1d(const std::function<double(double)>& b, double a_hat,
                                       const std::vector<double>& grid) {
    require(a_hat > 0.0, "quasi-potential: diffusion normalizer must be positive");
    require(grid.size() >= 2, "quasi-potential: need a grid");
    require(std::fabs(b(0.0)) <= 1e-12, "quasi-potential formula invalid: b(0) != 0");
    for (double s : grid) {
        if (s == 0.0) continue;
        require(s * b(s) < 0.0, "quasi-potential formula invalid: field not attracted to 0");
    }
    QuasiPotentialCurve c;
    c.x = grid;
    c.a_hat = a_hat;
    c.v.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        double xi = grid[i];
        c.v[i] = xi == 0.0 ? 0.0
                           : (2.0 / a_hat) * simpson([&](double s) { return -b(s); }, 0.0, xi, 129);
    }
    return c;
}

namespace {

double path_action(const std::vector<double>& phi, const std::function<double(double)>& b,
                   double a_hat, double dt) {
    double s = 0.0;
    for (size_t k = 0; k + 1 < phi.size(); ++k) {
        double v = (phi[k + 1] - phi[k]) / dt;
        double g = v - b(0.5 * (phi[k] + phi[k + 1]));
        s += g * g;
    }
    return s * dt / (2.0 * a_hat);
}

// Local action terms touched by node k.
double node_action(const std::vector<double>& phi, size_t k, double pk,
                   const std::function<double(double)>& b, double a_hat, double dt) {
    double s = 0.0;
    double vl = (pk - phi[k - 1]) / dt;
    double gl = vl - b(0.5 * (phi[k - 1] + pk));
    s += gl * gl;
    double vr = (phi[k + 1] - pk) / dt;
    double gr = vr - b(0.5 * (pk + phi[k + 1]));
    s += gr * gr;
    return s * dt / (2.0 * a_hat);
}

double relax_path(std::vector<double>& phi, const std::function<double(double)>& b, double a_hat,
                  double dt, int max_sweeps) {
    double total = path_action(phi, b, a_hat, dt);
    double scale = 0.0;
    for (double p : phi) scale = std::max(scale, std::fabs(p));
    scale = std::max(scale, 1.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double before = total;
        for (size_t k = 1; k + 1 < phi.size(); ++k) {
            double p = phi[k];
            double d = 1e-6 * scale;
            double f0 = node_action(phi, k, p, b, a_hat, dt);
            double fp = node_action(phi, k, p + d, b, a_hat, dt);
            double fm = node_action(phi, k, p - d, b, a_hat, dt);
            double g = (fp - fm) / (2 * d);
            double hh = (fp - 2 * f0 + fm) / (d * d);
            double step = hh > 1e-12 ? -g / hh : (g > 0 ? -d : d) * 1e3;
            step = std::clamp(step, -scale, scale);
            double pn = p + step;
            double fn = node_action(phi, k, pn, b, a_hat, dt);
            for (int half = 0; half < 10 && fn > f0; ++half) {
                step *= 0.5;
                pn = p + step;
                fn = node_action(phi, k, pn, b, a_hat, dt);
            }
            if (fn < f0) {
                phi[k] = pn;
                total += fn - f0;
            }
        }
        if (before - total <= 1e-10 * std::max(1.0, std::fabs(total))) break;
    }
    return path_action(phi, b, a_hat, dt);
}

}  // namespace

ActionResult action_oracle(const std::function<double(double)>& b, double a_hat, double x_target,
                           double T_max, int n_steps, uint64_t seed) {
    require(n_steps >= 4 && n_steps <= 200, "action oracle: n_steps must be in [4, 200]");
    require(a_hat > 0.0 && T_max > 0.0, "action oracle: bad parameters");
    ActionResult out;
    out.action = kInf;
    Rng rng(seed);
    const int restarts = 4;
    double lo_r = kInf, hi_r = -kInf;
    for (double T : {0.25 * T_max, 0.5 * T_max, T_max}) {
        for (int r = 0; r < restarts; ++r) {
            // Coarse-to-fine node doubling: smooth path shapes converge on the
            // coarse levels, the fine level only polishes.
            int n = n_steps;
            std::vector<int> levels;
            while (n > 25) {
                levels.push_back(n);
                n = (n + 1) / 2;
            }
            levels.push_back(n);
            std::reverse(levels.begin(), levels.end());

            std::vector<double> phi;
            double action = kInf;
            for (size_t li = 0; li < levels.size(); ++li) {
                int nl = levels[li];
                if (li == 0) {
                    phi = linspace(0.0, x_target, nl + 1);
                    if (r > 0)
                        for (size_t k = 1; k < phi.size() - 1; ++k)
                            phi[k] += 0.1 * r * std::max(1.0, std::fabs(x_target)) *
                                      (rng.uniform() - 0.5);
                } else {
                    std::vector<double> fine(nl + 1);
                    for (int k = 0; k <= nl; ++k) {
                        double pos = double(k) * (phi.size() - 1) / nl;
                        int i = std::min(int(pos), int(phi.size()) - 2);
                        double t = pos - i;
                        fine[k] = (1 - t) * phi[i] + t * phi[i + 1];
                    }
                    fine.front() = 0.0;
                    fine.back() = x_target;
                    phi = std::move(fine);
                }
                action = relax_path(phi, b, a_hat, T / nl, li + 1 == levels.size() ? 400 : 120);
            }
            lo_r = std::min(lo_r, action);
            hi_r = std::max(hi_r, action);
            if (action < out.action) {
                out.action = action;
                out.best_T = T;
            }
        }
    }
    out.dispersion = hi_r - lo_r;
    return out;
}

}  // namespace ergolab
