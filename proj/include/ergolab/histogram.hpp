#pragma once

#include <cmath>
#include <vector>

#include "ergolab/common.hpp"

namespace ergolab {

/// Normalized occupation histogram over spatial bins, with an optional joint
/// action axis. masses sum to 1 within 1e-12 (enforced by normalize()).
struct OccupationHistogram {
    std::vector<double> edges;    // size bins+1, ascending
    std::vector<double> mass;     // size bins
    std::vector<double> u_edges;  // optional action axis
    std::vector<double> joint;    // row-major [x bin][u bin] when u_edges set
    double out_mass = 0.0;        // fraction of weight outside the edges
    bool out_of_range_warn = false;

    int bins() const { return int(mass.size()); }
    double center(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }

    // Scales mass (and joint) to sum to 1; records the discarded fraction.
    void normalize() {
        double total = 0.0, inside = 0.0;
        for (double m : mass) inside += m;
        total = inside + out_mass;
        require(total > 0.0, "histogram: no mass to normalize");
        for (double& m : mass) m /= inside;
        for (double& m : joint) m /= inside;
        out_mass = out_mass / total;
        out_of_range_warn = out_mass > 0.01;
    }

    void validate() const {
        require(edges.size() == mass.size() + 1, "histogram: edges/mass size mismatch");
        double s = 0.0;
        for (size_t i = 1; i < edges.size(); ++i)
            require(edges[i] > edges[i - 1], "histogram: edges must ascend");
        for (double m : mass) {
            require(m >= 0.0, "histogram: negative mass");
            s += m;
        }
        require(std::fabs(s - 1.0) <= 1e-12, "histogram: masses must sum to 1");
    }

    // Total mass strictly left of q (bins split proportionally).
    double mass_below(double q) const {
        double s = 0.0;
        for (int i = 0; i < bins(); ++i) {
            if (edges[i + 1] <= q) {
                s += mass[i];
            } else if (edges[i] < q) {
                s += mass[i] * (q - edges[i]) / (edges[i + 1] - edges[i]);
            }
        }
        return s;
    }
};

}  // namespace ergolab
