#include "cli.hpp"
#include "growfn/error.hpp"
#include "growfn/gp_sampler.hpp"
#include "growfn/igmrf_sampler.hpp"
#include "growfn/kernels.hpp"
#include "growfn/panel.hpp"
#include "growfn/summary.hpp"
#include "growfn/synthgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <numeric>
#include <sstream>

namespace py = pybind11;
using namespace growfn;

namespace {

// NaN entries become missing cells.
Panel make_panel(const Eigen::MatrixXd& y, std::optional<std::vector<double>> times) {
    BoolMatrix mask = y.array().isNaN() == false;
    std::vector<double> t;
    if (times) {
        t = *times;
    } else {
        t.resize(static_cast<std::size_t>(y.cols()));
        std::iota(t.begin(), t.end(), 1.0);
    }
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < y.rows(); ++i) ids.push_back("s" + std::to_string(i + 1));
    return Panel(y, mask, std::move(t), std::move(ids));
}

std::vector<Cell> cells_from(const std::optional<BoolMatrix>& sel, Eigen::Index N, Eigen::Index T) {
    std::vector<Cell> out;
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < T; ++j)
            if (!sel || (*sel)(i, j)) out.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    return out;
}

py::dict gp_to_dict(const GpDraws& d) {
    py::dict out;
    out["model"] = "gp";
    out["regime"] = to_string(d.regime);
    out["ladder"] = d.ladder;
    out["iteration"] = d.iteration;
    out["s"] = d.s;
    std::vector<std::vector<std::array<double, 3>>> locs;
    for (const auto& draw : d.locations) {
        std::vector<std::array<double, 3>> row;
        for (const auto& th : draw) row.push_back({th.theta1, th.theta2, th.theta3});
        locs.push_back(row);
    }
    out["theta"] = locs;
    out["alpha"] = d.alpha;
    out["tau_eps"] = d.tau_eps;
    out["f"] = d.f;
    out["f_iteration"] = d.f_iteration;
    out["clusters_trace"] = d.clusters_trace;
    out["acceptance_rate"] = d.acceptance_rate();
    return out;
}

py::dict igmrf_to_dict(const IgmrfDraws& d) {
    py::dict out;
    out["model"] = "igmrf";
    out["iteration"] = d.iteration;
    out["s"] = d.s;
    out["kappa"] = d.kappa;
    out["alpha"] = d.alpha;
    out["tau_eps"] = d.tau_eps;
    out["f"] = d.f;
    out["f_iteration"] = d.f_iteration;
    out["clusters_trace"] = d.clusters_trace;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dirichlet-process mixtures of Gaussian processes and of RW2 intrinsic GMRFs for panels of time series";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto param = py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<DegenerateVarianceError>(m, "DegenerateVarianceError", param.ptr());

    m.def(
        "rq_covariance",
        [](double theta1, double theta2, double theta3, const std::vector<double>& times) {
            return rq_covariance({theta1, theta2, theta3}, times).values;
        },
        py::arg("theta1"), py::arg("theta2"), py::arg("theta3"), py::arg("times"));
    m.def(
        "se_covariance",
        [](double vscale, double lscale, const std::vector<double>& times) { return se_covariance({vscale, lscale}, times).values; },
        py::arg("vscale"), py::arg("lscale"), py::arg("times"));
    m.def(
        "rw2_precision", [](int T) { return Eigen::MatrixXd(rw2_structure(T).Q); }, py::arg("T"));
    m.def(
        "gp_marginal_loglik",
        [](const Eigen::MatrixXd& ys, double theta1, double theta2, double theta3, double tau_eps,
           const std::vector<double>& times) {
            std::vector<Eigen::VectorXd> rows;
            for (Eigen::Index i = 0; i < ys.rows(); ++i) rows.push_back(ys.row(i).transpose());
            return gp_marginal_loglik(rows, {theta1, theta2, theta3}, tau_eps, times);
        },
        py::arg("y"), py::arg("theta1"), py::arg("theta2"), py::arg("theta3"), py::arg("tau_eps"), py::arg("times"),
        "Sum over rows of y of the Gaussian-process marginal log-likelihood.");

    m.def(
        "simulate",
        [](const std::string& generator, std::size_t N, std::size_t T, std::size_t M, std::uint64_t seed,
           double noise_to_signal, double rho, std::optional<Eigen::MatrixXd> se_locations,
           std::optional<std::vector<double>> kappas) {
            SynthConfig cfg;
            cfg.generator = generator_from_string(generator);
            cfg.N = N;
            cfg.T = T;
            cfg.M = M;
            cfg.seed = seed;
            cfg.noise_to_signal = noise_to_signal;
            cfg.rho = rho;
            cfg.se_locations = std::move(se_locations);
            cfg.kappas = std::move(kappas);
            const auto d = generate(cfg);
            py::dict out;
            out["y"] = d.panel.values();
            out["times"] = d.panel.times();
            out["f_true"] = d.f_true;
            out["s_true"] = d.s_true;
            out["locations_true"] = d.locations_true;
            out["tau_eps_true"] = d.tau_eps_true;
            return out;
        },
        py::arg("generator") = "two-term-se", py::arg("N") = 100, py::arg("T") = 158, py::arg("M") = 3,
        py::arg("seed") = 1, py::arg("noise_to_signal") = 0.2, py::arg("rho") = 0.95, py::arg("se_locations") = py::none(),
        py::arg("kappas") = py::none());

    m.def(
        "fit_gp",
        [](const Eigen::MatrixXd& y, std::optional<std::vector<double>> times, int iterations, int burn_in, int thin,
           std::uint64_t seed, std::optional<std::vector<int>> ladder, const std::string& regime, bool clustering,
           bool store_f, int f_thin, double alpha_shape, double alpha_rate) {
            const Panel panel = make_panel(y, std::move(times));
            GpChainConfig cfg;
            cfg.iterations = iterations;
            cfg.burn_in = burn_in;
            cfg.thin = thin;
            cfg.seed = seed;
            cfg.ladder = std::move(ladder);
            cfg.regime = gp_regime_from_string(regime);
            cfg.clustering = clustering;
            cfg.store_f = store_f;
            cfg.f_thin = f_thin;
            cfg.alpha_prior = {alpha_shape, alpha_rate};
            GpDraws d;
            {
                py::gil_scoped_release release;
                d = run_gp_chain(panel, cfg);
            }
            return gp_to_dict(d);
        },
        py::arg("y"), py::arg("times") = py::none(), py::arg("iterations") = 2000, py::arg("burn_in") = 500,
        py::arg("thin") = 1, py::arg("seed") = 1, py::arg("ladder") = py::none(), py::arg("regime") = "auto",
        py::arg("clustering") = true, py::arg("store_f") = true, py::arg("f_thin") = 1, py::arg("alpha_shape") = 1.0,
        py::arg("alpha_rate") = 1.0, "Run the DP mixture of GPs sampler; NaN cells in y are missing.");

    m.def(
        "fit_igmrf",
        [](const Eigen::MatrixXd& y, std::optional<std::vector<double>> times, int iterations, int burn_in, int thin,
           std::uint64_t seed, bool clustering, bool store_f, int f_thin, const std::string& f_update, double alpha_shape,
           double alpha_rate) {
            const Panel panel = make_panel(y, std::move(times));
            IgmrfChainConfig cfg;
            cfg.iterations = iterations;
            cfg.burn_in = burn_in;
            cfg.thin = thin;
            cfg.seed = seed;
            cfg.clustering = clustering;
            cfg.store_f = store_f;
            cfg.f_thin = f_thin;
            cfg.f_update = igmrf_f_update_from_string(f_update);
            cfg.alpha_prior = {alpha_shape, alpha_rate};
            IgmrfDraws d;
            {
                py::gil_scoped_release release;
                d = run_igmrf_chain(panel, cfg);
            }
            return igmrf_to_dict(d);
        },
        py::arg("y"), py::arg("times") = py::none(), py::arg("iterations") = 8000, py::arg("burn_in") = 2000,
        py::arg("thin") = 1, py::arg("seed") = 1, py::arg("clustering") = true, py::arg("store_f") = true,
        py::arg("f_thin") = 1, py::arg("f_update") = "block", py::arg("alpha_shape") = 1.0, py::arg("alpha_rate") = 1.0,
        "Run the DP mixture of RW2 iGMRFs sampler; NaN cells in y are missing.");

    m.def(
        "pairwise_probability", [](const std::vector<Partition>& draws) { return pairwise_probability(draws); },
        py::arg("draws"));
    m.def(
        "dahl_select",
        [](const std::vector<Partition>& draws) {
            const auto pw = pairwise_probability(draws);
            const auto sel = dahl_select(draws, pw);
            py::dict out;
            out["s"] = sel.s;
            out["draw_index"] = sel.draw_index;
            out["loss"] = sel.loss;
            return out;
        },
        py::arg("draws"), "Least-squares partition among the draws.");
    m.def("misclustering_rate", &misclustering_rate, py::arg("est"), py::arg("truth"));
    m.def(
        "normalized_mspe",
        [](const std::vector<Eigen::MatrixXd>& f_draws, const Eigen::MatrixXd& f_true,
           std::optional<BoolMatrix> cells) {
            return normalized_mspe(f_draws, f_true, cells_from(cells, f_true.rows(), f_true.cols()));
        },
        py::arg("f_draws"), py::arg("f_true"), py::arg("cells") = py::none(),
        "Posterior-mean MSPE over the selected cells (all when omitted), divided by their true-f variance.");
    m.def(
        "credible_bands",
        [](const std::vector<Eigen::MatrixXd>& f_draws, double level) {
            const auto b = credible_bands(f_draws, level);
            return py::make_tuple(b.lower, b.mean, b.upper);
        },
        py::arg("f_draws"), py::arg("level") = 0.95, "Pointwise (lower, mean, upper) bands.");

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the growfn command line in-process; returns (exit code, stdout, stderr).");
}
