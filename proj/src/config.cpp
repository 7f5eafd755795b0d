#include "ergolab/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ergolab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json* child(const json& o, const std::string& key) {
    auto it = o.find(key);
    return it == o.end() ? nullptr : &*it;
}

double num(const json& o, const std::string& path, const std::string& key, double fallback) {
    const json* v = child(o, key);
    if (!v) return fallback;
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

double need_num(const json& o, const std::string& path, const std::string& key) {
    const json* v = child(o, key);
    if (!v) fail(path + "." + key, "missing required field");
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

int integer(const json& o, const std::string& path, const std::string& key, int fallback) {
    const json* v = child(o, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
    return v->get<int>();
}

std::vector<double> num_list(const json& o, const std::string& path, const std::string& key,
                             bool required) {
    const json* v = child(o, key);
    if (!v) {
        if (required) fail(path + "." + key, "missing required field");
        return {};
    }
    if (!v->is_array()) fail(path + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) fail(path + "." + key, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Potential1D parse_potential(const json& p, const std::string& path) {
    Potential1D V;
    V.x_lo = need_num(p, path, "lo");
    V.x_hi = need_num(p, path, "hi");
    V.beta = num(p, path, "beta", 1.0);
    if (const json* pieces = child(p, "pieces")) {
        if (!pieces->is_array() || pieces->empty())
            fail(path + ".pieces", "expected a nonempty array");
        for (size_t i = 0; i < pieces->size(); ++i) {
            const json& pc = (*pieces)[i];
            std::string ppath = path + ".pieces[" + std::to_string(i) + "]";
            Potential1D::Piece piece;
            piece.lo = need_num(pc, ppath, "lo");
            piece.coeffs = num_list(pc, ppath, "coeffs", true);
            V.pieces.push_back(std::move(piece));
        }
    } else {
        V.coeffs = num_list(p, path, "coeffs", true);
    }
    try {
        V.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return V;
}

SimConfig parse_sim(const json& s, const std::string& path, uint64_t default_seed) {
    SimConfig cfg;
    cfg.dt = num(s, path, "dt", cfg.dt);
    cfg.T = num(s, path, "T", cfg.T);
    cfg.batch = integer(s, path, "batch", cfg.batch);
    cfg.x0 = num(s, path, "x0", cfg.x0);
    cfg.record_every = integer(s, path, "record_every", cfg.record_every);
    double guard = num(s, path, "guard", 0.0);
    if (guard > 0.0) {
        cfg.guard_lo = -guard;
        cfg.guard_hi = guard;
    }
    cfg.seed = default_seed;
    if (const json* v = child(s, "seed")) {
        if (!v->is_number_unsigned()) fail(path + ".seed", "expected an unsigned integer");
        cfg.seed = v->get<uint64_t>();
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return cfg;
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(origin + ": top level must be an object");

    ExperimentConfig cfg;
    if (const json* v = child(doc, "seed")) {
        if (!v->is_number_unsigned()) fail("seed", "expected an unsigned integer");
        cfg.seed = v->get<uint64_t>();
    }
    if (const json* v = child(doc, "outdir")) {
        if (!v->is_string()) fail("outdir", "expected a string");
        cfg.outdir = v->get<std::string>();
    }

    const json* problem = child(doc, "problem");
    if (!problem) fail("problem", "missing required block");
    if (!problem->is_object()) fail("problem", "expected an object");

    if (const json* p = child(*problem, "potential")) {
        cfg.potential = parse_potential(*p, "problem.potential");
        cfg.has_potential = true;
    }

    if (const json* c = child(*problem, "control")) {
        double lo = need_num(*c, "problem.control", "min");
        double hi = need_num(*c, "problem.control", "max");
        int n = integer(*c, "problem.control", "points", 0);
        if (n < 1) fail("problem.control.points", "expected a positive integer");
        if (hi < lo) fail("problem.control", "max must be >= min");
        cfg.control = ControlSet::make(lo, hi, n);
    }

    if (const json* d = child(*problem, "drift")) {
        std::string kind;
        if (const json* k = child(*d, "kind")) {
            if (!k->is_string()) fail("problem.drift.kind", "expected a string");
            kind = k->get<std::string>();
        } else {
            kind = cfg.has_potential ? "gradient_flow" : "poly_affine";
        }
        if (kind == "gradient_flow") {
            if (!cfg.has_potential)
                fail("problem.drift", "gradient_flow drift needs problem.potential");
            cfg.drift.kind = DriftSpec::Kind::GradientFlow;
            cfg.drift.potential = cfg.potential;
        } else if (kind == "poly_affine") {
            cfg.drift.kind = DriftSpec::Kind::PolyAffine;
            cfg.drift.base_coeffs = num_list(*d, "problem.drift", "base_coeffs", true);
        } else {
            fail("problem.drift.kind", "unknown kind '" + kind +
                                           "' (expected gradient_flow or poly_affine)");
        }
        cfg.drift.K = num(*d, "problem.drift", "K", 0.0);
        cfg.has_drift = true;
    } else if (cfg.has_potential) {
        cfg.drift.kind = DriftSpec::Kind::GradientFlow;
        cfg.drift.potential = cfg.potential;
        cfg.has_drift = true;
    }

    if (const json* s = child(*problem, "sigma")) {
        cfg.sigma.coeffs = num_list(*s, "problem.sigma", "coeffs", true);
        cfg.sigma.lip = num(*s, "problem.sigma", "lip", 0.0);
    }

    if (const json* r = child(*problem, "cost")) {
        cfg.cost.x_coeffs = num_list(*r, "problem.cost", "x_coeffs", true);
        cfg.cost.x_center = num(*r, "problem.cost", "x_center", 0.0);
        cfg.cost.u_coeffs = num_list(*r, "problem.cost", "u_coeffs", false);
        if (cfg.cost.u_coeffs.empty()) cfg.cost.u_coeffs = {0.0};
        cfg.has_cost = true;
    }

    if (const json* e = child(*problem, "envelope")) {
        cfg.envelope.b1 = num_list(*e, "problem.envelope", "b1", true);
        cfg.envelope.b2 = num_list(*e, "problem.envelope", "b2", true);
        cfg.envelope.sigma_hat0 = num(*e, "problem.envelope", "sigma_hat0", 1.0);
        cfg.has_envelope = true;
    }

    if (const json* g = child(*problem, "grid")) {
        double lo = need_num(*g, "problem.grid", "lo");
        double hi = need_num(*g, "problem.grid", "hi");
        int n = integer(*g, "problem.grid", "n", 0);
        if (n < 3) fail("problem.grid.n", "expected an integer >= 3");
        if (hi <= lo) fail("problem.grid", "hi must be > lo");
        cfg.grid = linspace(lo, hi, n);
    } else if (cfg.has_potential) {
        cfg.grid = linspace(cfg.potential.x_lo, cfg.potential.x_hi, 601);
    }

    if (cfg.has_cost && !cfg.grid.empty())
        cfg.cost.record_bounds(cfg.grid.front(), cfg.grid.back(), cfg.control);

    if (const json* s = child(doc, "sim")) {
        if (!s->is_object()) fail("sim", "expected an object");
        cfg.sim = parse_sim(*s, "sim", cfg.seed);
    } else {
        cfg.sim.seed = cfg.seed;
    }
    if (const json* s = child(doc, "selection")) {
        if (!s->is_object()) fail("selection", "expected an object");
        cfg.selection = parse_sim(*s, "selection", cfg.seed + 1);
    } else {
        cfg.selection = cfg.sim;
        cfg.selection.seed = cfg.seed + 1;
    }

    cfg.eps = num_list(doc, "", "eps", false);
    for (double e : cfg.eps)
        if (e < 0.0) fail("eps", "ladder entries must be >= 0");

    if (const json* h = child(doc, "hjb")) {
        cfg.hjb.max_sweeps = integer(*h, "hjb", "max_sweeps", cfg.hjb.max_sweeps);
        cfg.hjb.residual_tol = num(*h, "hjb", "residual_tol", cfg.hjb.residual_tol);
        if (cfg.hjb.max_sweeps < 1) fail("hjb.max_sweeps", "expected a positive integer");
        if (cfg.hjb.residual_tol <= 0.0) fail("hjb.residual_tol", "must be > 0");
    }

    if (const json* v = child(doc, "verify")) {
        if (!v->is_object()) fail("verify", "expected an object");
        if (const json* list = child(*v, "checks")) {
            if (!list->is_array()) fail("verify.checks", "expected an array of strings");
            for (const auto& e : *list) {
                if (!e.is_string()) fail("verify.checks", "expected an array of strings");
                cfg.checks.push_back(e.get<std::string>());
            }
        }
        cfg.dissipativity_d = num(*v, "verify", "d", cfg.dissipativity_d);
        cfg.dissipativity_L = num(*v, "verify", "L", cfg.dissipativity_L);
        cfg.cap_R = num(*v, "verify", "cap_R", cfg.cap_R);
        cfg.exit_well = integer(*v, "verify", "well", cfg.exit_well);
    }

    if (const json* t = child(doc, "tunnel")) {
        if (!t->is_object()) fail("tunnel", "expected an object");
        cfg.chain_eps = num(*t, "tunnel", "eps", cfg.chain_eps);
        cfg.chain_T = num(*t, "tunnel", "T", cfg.chain_T);
        if (cfg.chain_eps < 0.0) fail("tunnel.eps", "must be >= 0");
        if (cfg.chain_T <= 0.0) fail("tunnel.T", "must be > 0");
    }
    if (cfg.chain_eps == 0.0 && !cfg.eps.empty()) cfg.chain_eps = cfg.eps.back();

    return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str(), path);
}

}  // namespace ergolab
