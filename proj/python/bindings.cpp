// Python surface of the laboratory: model types, the integrator, landscape
// and partition asymptotics, the ergodic HJB solver, the limit chain, the
// quasi-potential oracles, and the verification checks. Thin wrappers only;
// all numerics live in the C++ core.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ergolab/estimators.hpp"
#include "ergolab/hjb.hpp"
#include "ergolab/landscape.hpp"
#include "ergolab/model.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/tunnel.hpp"
#include "ergolab/verify.hpp"

namespace py = pybind11;
using namespace ergolab;

namespace {

// Accepts a float (constant coefficient) or a callable sigma(x).
Coefficient as_coefficient(const py::object& sigma) {
    if (py::isinstance<py::float_>(sigma) || py::isinstance<py::int_>(sigma)) {
        double s = sigma.cast<double>();
        return [s](double) { return s; };
    }
    return sigma.cast<std::function<double(double)>>();
}

ControlSource as_source(const ControlLaw* law, double constant_u) {
    ControlSource src;
    src.law = law;
    src.constant = constant_u;
    return src;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Small-noise ergodic control laboratory";

    // ---- model types ---------------------------------------------------
    py::class_<Potential1D::Piece>(m, "Piece")
        .def(py::init([](double lo, std::vector<double> coeffs) {
                 return Potential1D::Piece{lo, std::move(coeffs)};
             }),
             py::arg("lo"), py::arg("coeffs"))
        .def_readwrite("lo", &Potential1D::Piece::lo)
        .def_readwrite("coeffs", &Potential1D::Piece::coeffs);

    py::class_<Potential1D>(m, "Potential1D",
                            "Confining polynomial (or piecewise polynomial) potential on "
                            "[x_lo, x_hi]; coefficients ascending.")
        .def(py::init<>())
        .def(py::init([](std::vector<double> coeffs, double x_lo, double x_hi, double beta) {
                 Potential1D V;
                 V.coeffs = std::move(coeffs);
                 V.x_lo = x_lo;
                 V.x_hi = x_hi;
                 V.beta = beta;
                 return V;
             }),
             py::arg("coeffs"), py::arg("x_lo"), py::arg("x_hi"), py::arg("beta") = 1.0)
        .def_readwrite("coeffs", &Potential1D::coeffs)
        .def_readwrite("pieces", &Potential1D::pieces)
        .def_readwrite("beta", &Potential1D::beta)
        .def_readwrite("x_lo", &Potential1D::x_lo)
        .def_readwrite("x_hi", &Potential1D::x_hi)
        .def("value", &Potential1D::value, py::arg("x"))
        .def("dvalue", &Potential1D::dvalue, py::arg("x"))
        .def("ddvalue", &Potential1D::ddvalue, py::arg("x"))
        .def("validate", &Potential1D::validate);

    py::class_<ControlSet>(m, "ControlSet")
        .def_static("make", &ControlSet::make, py::arg("u_min"), py::arg("u_max"), py::arg("n"))
        .def_readonly("u_min", &ControlSet::u_min)
        .def_readonly("u_max", &ControlSet::u_max)
        .def_readonly("points", &ControlSet::points);

    py::class_<ControlLaw>(m, "ControlLaw",
                           "Markov control law on a state grid; barycenter(x) is the mean "
                           "control at the node governing x.")
        .def_readonly("grid", &ControlLaw::grid)
        .def_readonly("weights", &ControlLaw::weights)
        .def_readonly("relaxed", &ControlLaw::relaxed)
        .def("barycenter", &ControlLaw::barycenter, py::arg("x"))
        .def("barycenters", &ControlLaw::barycenters)
        .def_static("constant", &ControlLaw::constant, py::arg("set"), py::arg("grid"),
                    py::arg("u0"))
        .def_static("from_function", &ControlLaw::from_function, py::arg("set"), py::arg("grid"),
                    py::arg("f"));

    py::enum_<DriftSpec::Kind>(m, "DriftKind")
        .value("GradientFlow", DriftSpec::Kind::GradientFlow)
        .value("PolyAffine", DriftSpec::Kind::PolyAffine)
        .value("Custom", DriftSpec::Kind::Custom);

    py::class_<DriftSpec>(m, "DriftSpec")
        .def(py::init<>())
        .def_readwrite("kind", &DriftSpec::kind)
        .def_readwrite("potential", &DriftSpec::potential)
        .def_readwrite("base_coeffs", &DriftSpec::base_coeffs)
        .def_readwrite("K", &DriftSpec::K)
        .def("m", &DriftSpec::m, py::arg("x"), py::arg("u"))
        .def("base", &DriftSpec::base, py::arg("x"));

    m.def(
        "gradient_flow",
        [](const Potential1D& V, double K) {
            DriftSpec d;
            d.kind = DriftSpec::Kind::GradientFlow;
            d.potential = V;
            d.K = K;
            return d;
        },
        py::arg("potential"), py::arg("K") = 0.0, "Drift m(x,u) = -V'(x) + u.");
    m.def(
        "poly_affine",
        [](std::vector<double> coeffs, double K) {
            DriftSpec d;
            d.kind = DriftSpec::Kind::PolyAffine;
            d.base_coeffs = std::move(coeffs);
            d.K = K;
            return d;
        },
        py::arg("coeffs"), py::arg("K") = 0.0, "Drift m(x,u) = p(x) + u.");

    py::class_<DiffusionSpec>(m, "DiffusionSpec")
        .def(py::init<>())
        .def_readwrite("coeffs", &DiffusionSpec::coeffs)
        .def_readwrite("lip", &DiffusionSpec::lip)
        .def("sigma", &DiffusionSpec::sigma, py::arg("x"))
        .def("perturbed_sqrt", &DiffusionSpec::perturbed_sqrt, py::arg("x"), py::arg("eps"))
        .def("perturbed_additive", &DiffusionSpec::perturbed_additive, py::arg("x"),
             py::arg("eps"), py::arg("sigma_hat0"));

    py::class_<RunningCost>(m, "RunningCost")
        .def(py::init<>())
        .def_readwrite("x_coeffs", &RunningCost::x_coeffs)
        .def_readwrite("x_center", &RunningCost::x_center)
        .def_readwrite("u_coeffs", &RunningCost::u_coeffs)
        .def_readonly("lip_x", &RunningCost::lip_x)
        .def_readonly("sup_norm", &RunningCost::sup_norm)
        .def("r", &RunningCost::r, py::arg("x"), py::arg("u"))
        .def("record_bounds", &RunningCost::record_bounds, py::arg("x_lo"), py::arg("x_hi"),
             py::arg("set"), py::arg("nx") = 2001);

    py::class_<BoundingFields>(m, "BoundingFields")
        .def(py::init<>())
        .def_readwrite("b1", &BoundingFields::b1)
        .def_readwrite("b2", &BoundingFields::b2)
        .def_readwrite("sigma_hat0", &BoundingFields::sigma_hat0);

    // ---- integrator ------------------------------------------------------
    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("dt", &SimConfig::dt)
        .def_readwrite("T", &SimConfig::T)
        .def_readwrite("batch", &SimConfig::batch)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("x0", &SimConfig::x0)
        .def_readwrite("x0s", &SimConfig::x0s)
        .def_readwrite("guard_lo", &SimConfig::guard_lo)
        .def_readwrite("guard_hi", &SimConfig::guard_hi)
        .def_readwrite("record_every", &SimConfig::record_every);

    py::class_<PathBatch>(m, "PathBatch")
        .def_readonly("t", &PathBatch::t)
        .def_readonly("x", &PathBatch::x)
        .def_readonly("u", &PathBatch::u)
        .def_readonly("diverged", &PathBatch::diverged)
        .def_readonly("dt", &PathBatch::dt)
        .def("batch", &PathBatch::batch)
        .def("alive", &PathBatch::alive);

    py::class_<ExitSample>(m, "ExitSample")
        .def_readonly("traj", &ExitSample::traj)
        .def_readonly("tau", &ExitSample::tau)
        .def_readonly("side", &ExitSample::side)
        .def_readonly("location", &ExitSample::location)
        .def_readonly("censored", &ExitSample::censored);

    m.def(
        "simulate",
        [](const DriftSpec& drift, const py::object& sigma, const SimConfig& cfg,
           const ControlLaw* law, double constant_u) {
            return simulate(drift, as_coefficient(sigma), as_source(law, constant_u), cfg);
        },
        py::arg("drift"), py::arg("sigma"), py::arg("cfg"), py::arg("law") = nullptr,
        py::arg("constant_u") = 0.0,
        "Euler-Maruyama batch; sigma is a constant or a callable sigma(x).");
    m.def(
        "first_exit",
        [](const DriftSpec& drift, const py::object& sigma, double a, double b,
           const SimConfig& cfg, const ControlLaw* law, double constant_u) {
            return first_exit(drift, as_coefficient(sigma), as_source(law, constant_u), a, b,
                              cfg);
        },
        py::arg("drift"), py::arg("sigma"), py::arg("a"), py::arg("b"), py::arg("cfg"),
        py::arg("law") = nullptr, py::arg("constant_u") = 0.0,
        "First exit from (a, b) per trajectory, censored at the horizon.");

    // ---- estimators ------------------------------------------------------
    py::class_<ErgodicEstimate>(m, "ErgodicEstimate")
        .def_readonly("rho", &ErgodicEstimate::rho)
        .def_readonly("se", &ErgodicEstimate::se)
        .def_readonly("T", &ErgodicEstimate::T)
        .def_readonly("burn_in", &ErgodicEstimate::burn_in)
        .def_readonly("batch", &ErgodicEstimate::batch)
        .def_readonly("excluded", &ErgodicEstimate::excluded);

    py::class_<OccupationHistogram>(m, "OccupationHistogram")
        .def_readonly("edges", &OccupationHistogram::edges)
        .def_readonly("mass", &OccupationHistogram::mass)
        .def_readonly("out_mass", &OccupationHistogram::out_mass);

    m.def("ergodic_cost", &ergodic_cost, py::arg("paths"), py::arg("cost"),
          py::arg("burn_in") = 0.2);
    m.def("empirical_measure", &empirical_measure, py::arg("paths"), py::arg("bins"),
          py::arg("burn_in"), py::arg("x_lo"), py::arg("x_hi"));
    m.def("well_occupation", &well_occupation, py::arg("paths"), py::arg("wells"),
          py::arg("burn_in") = 0.2);
    m.def(
        "generator_residual",
        [](const OccupationHistogram& hist, const DriftSpec& drift, const DiffusionSpec& sigma,
           const ControlLaw* law, double eps, int k, double lo, double hi) {
            return generator_residual(hist, drift, sigma, law, eps, bspline_bumps(k, lo, hi));
        },
        py::arg("hist"), py::arg("drift"), py::arg("sigma"), py::arg("law") = nullptr,
        py::arg("eps") = 0.0, py::arg("bumps") = 3, py::arg("lo") = -1.0, py::arg("hi") = 1.0,
        "Stationarity residuals int L f d(hist) over a b-spline bump family.");

    // ---- landscape ---------------------------------------------------------
    py::class_<WellDecomposition>(m, "WellDecomposition")
        .def_readonly("minima", &WellDecomposition::minima)
        .def_readonly("maxima", &WellDecomposition::maxima)
        .def_readonly("min_value", &WellDecomposition::min_value)
        .def_readonly("max_value", &WellDecomposition::max_value)
        .def_readonly("min_curv", &WellDecomposition::min_curv)
        .def_readonly("max_curv", &WellDecomposition::max_curv)
        .def_readonly("depth_left", &WellDecomposition::depth_left)
        .def_readonly("depth_right", &WellDecomposition::depth_right)
        .def_readonly("lambda_i", &WellDecomposition::lambda_i)
        .def_readonly("has_metastability", &WellDecomposition::has_metastability)
        .def_readonly("deep", &WellDecomposition::deep)
        .def_readonly("lambda_", &WellDecomposition::lambda)
        .def_readonly("separators", &WellDecomposition::separators)
        .def("wells", &WellDecomposition::wells)
        .def("coarse_index", &WellDecomposition::coarse_index, py::arg("q"))
        .def("basin_index", &WellDecomposition::basin_index, py::arg("q"));

    py::class_<LaplaceData>(m, "LaplaceData")
        .def_readonly("eps", &LaplaceData::eps)
        .def_readonly("C", &LaplaceData::C)
        .def_readonly("partition", &LaplaceData::partition)
        .def_readonly("mass", &LaplaceData::mass);

    py::class_<GibbsResult>(m, "GibbsResult")
        .def_readonly("hist", &GibbsResult::hist)
        .def_readonly("partition", &GibbsResult::partition)
        .def_readonly("v_min", &GibbsResult::v_min);

    py::class_<QuasiPotentialCurve>(m, "QuasiPotentialCurve")
        .def_readonly("x", &QuasiPotentialCurve::x)
        .def_readonly("v", &QuasiPotentialCurve::v)
        .def_readonly("a_hat", &QuasiPotentialCurve::a_hat)
        .def("at", &QuasiPotentialCurve::at, py::arg("q"));

    py::class_<ActionResult>(m, "ActionResult")
        .def_readonly("action", &ActionResult::action)
        .def_readonly("dispersion", &ActionResult::dispersion)
        .def_readonly("best_T", &ActionResult::best_T);

    m.def(
        "analyze_landscape",
        [](const Potential1D& V, int grid_n) {
            return analyze_landscape(V.view(), V.x_lo, V.x_hi, grid_n);
        },
        py::arg("potential"), py::arg("grid_n") = 10000,
        "Critical points, well depths, metastability scales, and the deep-well set.");
    m.def("laplace_partition", &laplace_partition, py::arg("wells"), py::arg("eps"));
    m.def(
        "gibbs_quadrature",
        [](const Potential1D& V, double eps, int bins) {
            return gibbs_quadrature(V.view(), eps, V.x_lo, V.x_hi, bins);
        },
        py::arg("potential"), py::arg("eps"), py::arg("bins") = 400);
    m.def("quasi_potential_1d", &quasi_potential_1d, py::arg("b"), py::arg("a_hat"),
          py::arg("grid"),
          "Closed-form quasi-potential (2/a_hat) int_0^x -b(s) ds; requires b(0)=0 and "
          "s b(s) < 0 away from 0.");
    m.def("action_oracle", &action_oracle, py::arg("b"), py::arg("a_hat"), py::arg("x_target"),
          py::arg("T_max") = 8.0, py::arg("n_steps") = 200, py::arg("seed") = 1234,
          "Direct minimization of the path-space action to x_target.");

    // ---- ergodic HJB -------------------------------------------------------
    py::class_<HjbSolution>(m, "HjbSolution")
        .def_readonly("x", &HjbSolution::x)
        .def_readonly("phi", &HjbSolution::phi)
        .def_readonly("rho", &HjbSolution::rho)
        .def_readonly("policy", &HjbSolution::policy)
        .def_readonly("rho_log", &HjbSolution::rho_log)
        .def_readonly("residual_log", &HjbSolution::residual_log)
        .def_readonly("sweeps", &HjbSolution::sweeps)
        .def_readonly("converged", &HjbSolution::converged)
        .def_readonly("residual", &HjbSolution::residual);

    m.def(
        "solve_ergodic_hjb",
        [](const DriftSpec& drift, double eps, const RunningCost& cost,
           const std::vector<double>& grid, const ControlSet& U, int max_sweeps,
           double residual_tol, int normalize_node) {
            HjbOptions opts;
            opts.max_sweeps = max_sweeps;
            opts.residual_tol = residual_tol;
            opts.normalize_node = normalize_node;
            return solve_ergodic_hjb(drift, eps, cost, grid, U, opts);
        },
        py::arg("drift"), py::arg("eps"), py::arg("cost"), py::arg("grid"), py::arg("U"),
        py::arg("max_sweeps") = 100, py::arg("residual_tol") = 1e-8,
        py::arg("normalize_node") = -1,
        "Policy iteration for the ergodic value and feedback on a uniform grid.");

    // ---- limit chain ---------------------------------------------------------
    py::class_<TunnelChain>(m, "TunnelChain")
        .def_readonly("states", &TunnelChain::states)
        .def_readonly("p", &TunnelChain::p)
        .def_readonly("lambda_", &TunnelChain::lambda)
        .def_readonly("Q", &TunnelChain::Q)
        .def_readonly("mu", &TunnelChain::mu)
        .def_readonly("C", &TunnelChain::C)
        .def("size", &TunnelChain::size);

    py::class_<ChainPath>(m, "ChainPath")
        .def_readonly("t", &ChainPath::t)
        .def_readonly("state", &ChainPath::state)
        .def_readonly("T", &ChainPath::T)
        .def("jumps", &ChainPath::jumps)
        .def("occupation", &ChainPath::occupation, py::arg("n_states"));

    m.def(
        "exit_prob_exact",
        [](const Potential1D& V, double eps, int well, const WellDecomposition& d, int n_nodes) {
            return exit_prob_exact(V.view(), eps, well, d, n_nodes);
        },
        py::arg("potential"), py::arg("eps"), py::arg("well"), py::arg("wells"),
        py::arg("n_nodes") = 4001, "Exact (left, right) exit probabilities by scale function.");
    m.def("exit_prob_asymptotic", &exit_prob_asymptotic, py::arg("wells"), py::arg("well"));
    m.def("build_rate_matrix", &build_rate_matrix, py::arg("wells"), py::arg("laplace"));
    m.def("chain_invariant", &chain_invariant, py::arg("chain"));
    m.def("simulate_chain", &simulate_chain, py::arg("chain"), py::arg("T"), py::arg("seed"));
    m.def("ergodic_value_representation", &ergodic_value_representation, py::arg("cost"),
          py::arg("u0"), py::arg("chain"));

    // ---- verification checks ---------------------------------------------------
    py::class_<VerificationReport>(m, "VerificationReport")
        .def_readonly("check", &VerificationReport::check)
        .def_readonly("claim", &VerificationReport::claim)
        .def_readonly("measured", &VerificationReport::measured)
        .def_readonly("bound", &VerificationReport::bound)
        .def_readonly("tolerance", &VerificationReport::tolerance)
        .def_readonly("pass_", &VerificationReport::pass)
        .def_readonly("runtime_s", &VerificationReport::runtime_s)
        .def_readonly("seed", &VerificationReport::seed)
        .def_readonly("detail", &VerificationReport::detail)
        .def("__repr__", [](const VerificationReport& r) {
            return "<VerificationReport " + r.check + (r.pass ? " pass" : " FAIL") + ">";
        });

    m.def("verify_moment_bound", &verify_moment_bound, py::arg("drift"), py::arg("eps_ladder"),
          py::arg("cfg"));
    m.def("verify_comparison", &verify_comparison, py::arg("bounds"), py::arg("drift"),
          py::arg("sigma"), py::arg("eps"), py::arg("cfg"));
    m.def("verify_flat_error", &verify_flat_error, py::arg("drift"), py::arg("cost"),
          py::arg("U"), py::arg("grid"), py::arg("eps_ladder"), py::arg("cfg"));
    m.def("verify_dissipativity", &verify_dissipativity, py::arg("bounds"), py::arg("d"),
          py::arg("L"), py::arg("eps"), py::arg("cfg"));
    m.def("verify_exit_law", &verify_exit_law, py::arg("potential"), py::arg("wells"),
          py::arg("eps_ladder"), py::arg("cfg"));
    m.def("verify_exit_location", &verify_exit_location, py::arg("potential"), py::arg("wells"),
          py::arg("well"), py::arg("eps_ladder"), py::arg("cfg"));
    m.def("verify_chain_limit", &verify_chain_limit, py::arg("potential"), py::arg("wells"),
          py::arg("eps"), py::arg("cfg"));
    m.def("verify_value_and_selection", &verify_value_and_selection, py::arg("potential"),
          py::arg("wells"), py::arg("cost"), py::arg("eps"), py::arg("cfg_value"),
          py::arg("cfg_select"));
    m.def("verify_constant_sigma_gap", &verify_constant_sigma_gap, py::arg("drift"),
          py::arg("sigma"), py::arg("cost"), py::arg("bounds"), py::arg("U"), py::arg("grid"),
          py::arg("eps_ladder"), py::arg("cap_R") = 1.0);
}
