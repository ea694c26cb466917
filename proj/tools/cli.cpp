#include "cli.hpp"

#include "growfn/csv.hpp"
#include "growfn/error.hpp"
#include "growfn/workflow.hpp"

#include <CLI11.hpp>

#include <ostream>
#include <sstream>

namespace growfn::cli {

namespace {

namespace wf = growfn::workflow;

std::vector<int> parse_ladder(const std::string& text) {
    std::vector<int> out;
    if (text == "none" || text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = csv::parse_number(item);
        if (!v || *v != static_cast<int>(*v)) throw ParameterError("--ladder expects comma-separated integers, got '" + text + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::vector<double> parse_reals(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = csv::parse_number(item);
        if (!v) throw ParameterError(std::string(flag) + " expects comma-separated numbers, got '" + text + "'");
        out.push_back(*v);
    }
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dirichlet-process mixtures of Gaussian processes and intrinsic GMRFs for panels of time series", "growfn"};
    app.require_subcommand(1);

    // simulate
    SynthConfig sim;
    std::string generator = "two-term-se";
    std::string kappas;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel with known clustering");
    simulate->add_option("--generator", generator, "two-term-se or proper-gmrf")->capture_default_str();
    simulate->add_option("--seed", sim.seed)->capture_default_str();
    simulate->add_option("--N", sim.N, "Number of series")->capture_default_str();
    simulate->add_option("--T", sim.T, "Number of time points")->capture_default_str();
    simulate->add_option("--M", sim.M, "Number of true clusters")->capture_default_str();
    simulate->add_option("--noise-to-signal", sim.noise_to_signal)->capture_default_str();
    simulate->add_option("--rho", sim.rho, "Proper GMRF correlation")->capture_default_str();
    simulate->add_option("--kappas", kappas, "Proper GMRF precisions, comma-separated (default: Ga(1,1) draws)");
    simulate->add_flag("--from-hyperpriors", sim.se_from_hyperpriors, "Draw SE locations from their hyperpriors");
    simulate->add_option("-o,--out", sim_out, "Output directory")->required();

    // fit
    wf::FitOptions fo;
    std::string input;
    std::string layout = "series-rows";
    std::string model = "gp";
    std::string fit_out;
    std::optional<int> iterations;
    std::optional<int> burn_in;
    int thin = 1;
    int f_thin = 1;
    std::optional<std::string> ladder;
    std::string regime = "auto";
    std::string f_update = "block";
    double alpha_shape = 1.0;
    double alpha_rate = 1.0;
    std::uint64_t seed = 1;
    bool no_clustering = false;
    bool no_f = false;
    auto* fit = app.add_subcommand("fit", "Run a posterior sampler on a CSV panel");
    fit->add_option("input", input, "Panel CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--layout", layout, "series-rows or long")->capture_default_str();
    fit->add_option("--model", model, "gp or igmrf")->capture_default_str();
    fit->add_option("--iterations", iterations, "Total iterations (default 2000 gp, 8000 igmrf)");
    fit->add_option("--burn-in", burn_in, "Discarded iterations (default 500 gp, 2000 igmrf)");
    fit->add_option("--thin", thin)->capture_default_str();
    fit->add_option("--f-thin", f_thin, "Keep f from every k-th retained draw")->capture_default_str();
    fit->add_option("--ladder", ladder, "GP tempering time-subset sizes, e.g. 100,60 (or none)");
    fit->add_option("--regime", regime, "GP regime: auto, marginalized or cosampled")->capture_default_str();
    fit->add_option("--f-update", f_update, "iGMRF f update: block or single-site")->capture_default_str();
    fit->add_option("--c-star", fo.gp.c_star, "Auxiliary locations per GP assignment")->capture_default_str();
    fit->add_option("--alpha-shape", alpha_shape, "Shape of the gamma prior on alpha")->capture_default_str();
    fit->add_option("--alpha-rate", alpha_rate, "Rate of the gamma prior on alpha")->capture_default_str();
    fit->add_option("--seed", seed)->capture_default_str();
    fit->add_option("--holdout", fo.holdout, "Fraction of observed cells held out for testing")->capture_default_str();
    fit->add_option("--holdout-seed", fo.holdout_seed)->capture_default_str();
    fit->add_option("--chains", fo.chains, "Independent chains, pooled after burn-in")->capture_default_str();
    fit->add_flag("--standardize", fo.standardize, "Center and scale each series before fitting");
    fit->add_flag("--no-clustering", no_clustering, "Single cluster with alpha fixed at 0");
    fit->add_flag("--no-f", no_f, "Do not store f draws");
    fit->add_option("-o,--out", fit_out, "Output directory")->required();

    // summarize
    std::string draws_dir;
    double level = 0.95;
    std::optional<std::string> truth;
    std::optional<std::string> sum_out;
    auto* summarize = app.add_subcommand("summarize", "Summarize the draws of a fit directory");
    summarize->add_option("draws", draws_dir, "Directory written by fit")->required();
    summarize->add_option("--level", level, "Credible band level")->capture_default_str();
    summarize->add_option("--truth", truth, "Directory written by simulate");
    summarize->add_option("-o,--out", sum_out, "Output directory (default: the draws directory)");

    // reproduce
    std::string experiment;
    std::string scale = "desk";
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string rep_out = "reproduce";
    auto* reproduce = app.add_subcommand("reproduce", "Simulate, fit both models and report");
    reproduce->add_option("experiment", experiment, "sim1, sim2 or ablation")->required();
    reproduce->add_option("--scale", scale, "desk or full")->capture_default_str();
    reproduce->add_option("--seeds", seeds, "Simulation seeds")->delimiter(',')->capture_default_str();
    reproduce->add_option("-o,--out", rep_out, "Output directory")->capture_default_str();

    std::vector<std::string> argv_store{"growfn"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run with --help for usage\n";
        return 2;
    }

    try {
        if (*simulate) {
            sim.generator = generator_from_string(generator);
            if (!kappas.empty()) sim.kappas = parse_reals(kappas, "--kappas");
            const auto data = wf::simulate(sim, sim_out);
            out << "wrote " << data.panel.num_series() << " x " << data.panel.num_times() << " panel to " << sim_out << '\n';
        } else if (*fit) {
            fo.model = wf::model_from_string(model);
            PanelLayout pl;
            if (layout == "series-rows") pl = PanelLayout::SeriesRows;
            else if (layout == "long") pl = PanelLayout::LongFormat;
            else throw ParameterError("unknown layout '" + layout + "' (expected series-rows or long)");
            fo.gp.seed = fo.igmrf.seed = seed;
            fo.gp.thin = fo.igmrf.thin = thin;
            fo.gp.f_thin = fo.igmrf.f_thin = f_thin;
            fo.gp.alpha_prior = fo.igmrf.alpha_prior = {alpha_shape, alpha_rate};
            fo.gp.clustering = fo.igmrf.clustering = !no_clustering;
            fo.gp.store_f = fo.igmrf.store_f = !no_f;
            fo.gp.regime = gp_regime_from_string(regime);
            fo.igmrf.f_update = igmrf_f_update_from_string(f_update);
            if (iterations) fo.gp.iterations = fo.igmrf.iterations = *iterations;
            if (burn_in) fo.gp.burn_in = fo.igmrf.burn_in = *burn_in;
            if (ladder) fo.gp.ladder = parse_ladder(*ladder);
            if (fo.model == wf::Model::Igmrf && (ladder || regime != "auto"))
                throw ParameterError("--ladder and --regime apply to the gp model only");
            if (fo.model == wf::Model::Gp && f_update != "block")
                throw ParameterError("--f-update applies to the igmrf model only");
            const auto r = wf::fit(input, pl, fo, fit_out, args);
            out << "retained " << r.draws.size() << " draws (" << r.draws.f.size() << " with f) in " << fit_out << '\n';
        } else if (*summarize) {
            const auto s = wf::summarize(draws_dir, level, truth ? std::optional<std::filesystem::path>(*truth) : std::nullopt,
                                         sum_out ? *sum_out : draws_dir);
            out << "selected partition: " << *std::max_element(s.selected.s.begin(), s.selected.s.end()) + 1 << " clusters\n";
            if (s.normalized_mspe) out << "normalized MSPE: " << *s.normalized_mspe << '\n';
            if (s.misclustering) out << "mis-clustering: " << *s.misclustering << '\n';
        } else if (*reproduce) {
            std::vector<std::uint64_t> sd(seeds.begin(), seeds.end());
            wf::reproduce(wf::experiment_from_string(experiment), wf::scale_from_string(scale), sd, rep_out,
                          [&](const std::string& line) { out << line << std::endl; });
            out << "wrote " << rep_out << "/report.md\n";
        }
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace growfn::cli
