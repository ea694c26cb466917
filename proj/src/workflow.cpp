#include "growfn/workflow.hpp"

#include "growfn/csv.hpp"
#include "growfn/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace growfn::workflow {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

json prior_json(const GammaPrior& g) { return {{"shape", g.shape}, {"rate", g.rate}}; }

json config_json(const GpChainConfig& c) {
    json j;
    j["iterations"] = c.iterations;
    j["burn_in"] = c.burn_in;
    j["thin"] = c.thin;
    j["c_star"] = c.c_star;
    j["ladder"] = c.ladder ? json(*c.ladder) : json(nullptr);
    j["slice_width"] = c.slice_width;
    j["theta_prior"] = json::array({prior_json(c.theta_prior[0]), prior_json(c.theta_prior[1]), prior_json(c.theta_prior[2])});
    j["tau_prior"] = prior_json(c.tau_prior);
    j["alpha_prior"] = prior_json(c.alpha_prior);
    j["seed"] = c.seed;
    j["regime"] = to_string(c.regime);
    j["clustering"] = c.clustering;
    j["store_f"] = c.store_f;
    j["f_thin"] = c.f_thin;
    j["init_clusters"] = c.init_clusters;
    return j;
}

json config_json(const IgmrfChainConfig& c) {
    json j;
    j["iterations"] = c.iterations;
    j["burn_in"] = c.burn_in;
    j["thin"] = c.thin;
    j["kappa_prior"] = prior_json(c.kappa_prior);
    j["tau_prior"] = prior_json(c.tau_prior);
    j["alpha_prior"] = prior_json(c.alpha_prior);
    j["seed"] = c.seed;
    j["clustering"] = c.clustering;
    j["store_f"] = c.store_f;
    j["f_thin"] = c.f_thin;
    j["f_update"] = to_string(c.f_update);
    return j;
}

json config_json(const SynthConfig& c) {
    json j;
    j["generator"] = to_string(c.generator);
    j["N"] = c.N;
    j["T"] = c.T;
    j["M"] = c.M;
    j["noise_to_signal"] = c.noise_to_signal;
    j["seed"] = c.seed;
    if (c.generator == Generator::TwoTermSE) {
        if (c.se_locations) {
            json cols = json::array();
            for (Eigen::Index m = 0; m < c.se_locations->cols(); ++m)
                cols.push_back({(*c.se_locations)(0, m), (*c.se_locations)(1, m), (*c.se_locations)(2, m), (*c.se_locations)(3, m)});
            j["se_locations"] = cols;
        } else {
            j["se_locations"] = c.M == 3 && !c.se_from_hyperpriors ? "default" : "draw-from-hyperpriors";
        }
    } else {
        j["rho"] = c.rho;
        j["kappas"] = c.kappas ? json(*c.kappas) : json("draw Ga(1,1)");
    }
    return j;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.filename().string() + ": " + e.what());
    }
}

Eigen::MatrixXd back_transform(Eigen::MatrixXd m, const std::optional<std::vector<Standardization>>& st) {
    if (!st) return m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto& s = (*st)[static_cast<std::size_t>(i)];
        m.row(i) = (m.row(i).array() * s.sd + s.mean).matrix();
    }
    return m;
}

std::string fixed(double x, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

}  // namespace

std::string to_string(Model m) { return m == Model::Gp ? "gp" : "igmrf"; }

Model model_from_string(const std::string& s) {
    if (s == "gp") return Model::Gp;
    if (s == "igmrf") return Model::Igmrf;
    throw ParameterError("unknown model '" + s + "' (expected gp or igmrf)");
}

int thread_limit() {
    if (const char* env = std::getenv("GROWFN_THREADS"); env && *env) {
        auto v = csv::parse_number(env);
        if (!v || *v < 1 || *v != std::floor(*v)) throw ParameterError("GROWFN_THREADS must be a positive integer");
        return static_cast<int>(*v);
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::uint64_t chain_seed(std::uint64_t seed, int chain) {
    if (chain == 0) return seed;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(chain)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ---- simulate ---------------------------------------------------------------

SyntheticData simulate(const SynthConfig& cfg, const fs::path& out) {
    auto data = generate(cfg);
    fs::create_directories(out);
    write_panel(data.panel, out / "panel.csv", PanelLayout::SeriesRows);
    write_panel(Panel(data.f_true, BoolMatrix::Constant(data.f_true.rows(), data.f_true.cols(), true), data.panel.times(),
                      data.panel.series_ids()),
                out / "f_true.csv", PanelLayout::SeriesRows);
    write_partition(data.s_true, data.panel.series_ids(), out / "s_true.csv");
    const std::vector<std::string> header = cfg.generator == Generator::TwoTermSE
                                                ? std::vector<std::string>{"theta1_long", "theta2_long", "theta1_short", "theta2_short"}
                                                : std::vector<std::string>{"kappa"};
    write_matrix(data.locations_true.transpose(), header, out / "locations_true.csv");
    json m;
    m["manifest_version"] = kManifestVersion;
    m["version"] = kVersion;
    m["command"] = "simulate";
    m["config"] = config_json(cfg);
    m["tau_eps_true"] = data.tau_eps_true;
    m["files"] = {"panel.csv", "f_true.csv", "s_true.csv", "locations_true.csv"};
    write_json(m, out / "manifest.json");
    return data;
}

// ---- fit --------------------------------------------------------------------

FitResult fit_panel(const Panel& panel, const FitOptions& opt) {
    if (opt.chains < 1) throw ParameterError("chains must be at least 1");
    std::optional<HoldoutSplit> split;
    Panel train = panel;
    if (opt.holdout > 0.0) {
        split = make_holdout(panel, opt.holdout, opt.holdout_seed);
        train = split->train;
    }
    if (opt.standardize) train = standardize(train);
    if (opt.model == Model::Gp) opt.gp.validate(train.num_times());
    else opt.igmrf.validate();

    const int k = opt.chains;
    std::vector<ChainDraws> results(static_cast<std::size_t>(k));
    std::vector<double> acceptance(static_cast<std::size_t>(k), 0.0);
    std::string regime = "gibbs";
    std::vector<int> ladder;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
    std::atomic<int> next{0};
    std::mutex meta;

    auto worker = [&] {
        for (int c = next++; c < k; c = next++) {
            try {
                if (opt.model == Model::Gp) {
                    auto cfg = opt.gp;
                    cfg.seed = chain_seed(opt.gp.seed, c);
                    auto d = run_gp_chain(train, cfg);
                    acceptance[static_cast<std::size_t>(c)] = d.acceptance_rate();
                    if (c == 0) {
                        std::lock_guard lock(meta);
                        regime = to_string(d.regime);
                        ladder = d.ladder;
                    }
                    results[static_cast<std::size_t>(c)] = to_chain_draws(d, c);
                } else {
                    auto cfg = opt.igmrf;
                    cfg.seed = chain_seed(opt.igmrf.seed, c);
                    results[static_cast<std::size_t>(c)] = to_chain_draws(run_igmrf_chain(train, cfg), c);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(c)] = std::current_exception();
            }
        }
    };
    const int workers = std::min(k, thread_limit());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    ChainDraws pooled = std::move(results[0]);
    for (int c = 1; c < k; ++c) pooled.append(results[static_cast<std::size_t>(c)]);
    if (opt.model == Model::Igmrf) acceptance.clear();
    return {std::move(pooled), std::move(train), std::move(split), std::move(acceptance), regime, ladder};
}

FitResult fit(const fs::path& input, PanelLayout layout, const FitOptions& opt, const fs::path& out,
              const std::vector<std::string>& argv) {
    const Panel panel = load_panel(input, layout);
    auto r = fit_panel(panel, opt);
    fs::create_directories(out);
    write_draws(r.draws, out);
    const auto sidecar = out / "holdout_truth.csv";
    if (r.split) write_cells(r.split->test_index, r.split->test_truth, sidecar);
    else fs::remove(sidecar);
    const auto stpath = out / "standardization.csv";
    if (r.train.standardization()) write_standardization(*r.train.standardization(), r.train.series_ids(), stpath);
    else fs::remove(stpath);

    json m;
    m["manifest_version"] = kManifestVersion;
    m["version"] = kVersion;
    m["command"] = "fit";
    m["argv"] = argv;
    m["input"] = fs::absolute(input).string();
    m["layout"] = layout == PanelLayout::SeriesRows ? "series-rows" : "long";
    m["model"] = to_string(opt.model);
    m["config"] = opt.model == Model::Gp ? config_json(opt.gp) : config_json(opt.igmrf);
    m["chains"] = opt.chains;
    m["chain_seeds"] = json::array();
    for (int c = 0; c < opt.chains; ++c)
        m["chain_seeds"].push_back(chain_seed(opt.model == Model::Gp ? opt.gp.seed : opt.igmrf.seed, c));
    m["holdout"] = opt.holdout > 0.0 ? json{{"fraction", opt.holdout}, {"seed", opt.holdout_seed},
                                            {"cells", r.split->test_index.size()}, {"sidecar", "holdout_truth.csv"}}
                                     : json(nullptr);
    m["standardize"] = opt.standardize;
    m["dimensions"] = {{"N", r.train.num_series()}, {"T", r.train.num_times()}, {"observed", r.train.observed_count()}};
    m["series_ids"] = r.train.series_ids();
    m["times"] = r.train.times();
    if (opt.model == Model::Gp) {
        m["regime"] = r.regime;
        m["ladder"] = r.ladder;
        m["acceptance_rates"] = r.acceptance;
    }
    m["retained_draws"] = r.draws.size();
    m["f_draws"] = r.draws.f.size();
    write_json(m, out / "manifest.json");
    return r;
}

// ---- summarize --------------------------------------------------------------

Summary summarize_draws(const ChainDraws& d, double level, const std::optional<std::vector<Standardization>>& st,
                        const Truth& truth, const std::vector<Cell>& cells_in, const std::vector<double>& held_out_y) {
    if (d.size() == 0) throw FormatError("no retained draws to summarize");
    Summary out;
    out.pairwise = pairwise_probability(d.s);
    out.selected = dahl_select(d.s, out.pairwise, d.iteration);
    for (const auto& locs : d.locations) ++out.clusters_distribution[static_cast<int>(locs.size())];
    out.note = "normalized MSPE uses the posterior mean of f";

    if (truth.s) out.misclustering = misclustering_rate(out.selected.s, *truth.s);
    if (d.f.empty()) return out;

    std::vector<Cell> cells = cells_in;
    if (cells.empty())
        for (std::size_t i = 0; i < d.num_series; ++i)
            for (std::size_t j = 0; j < static_cast<std::size_t>(d.f.front().cols()); ++j) cells.push_back({i, j});

    const Eigen::MatrixXd f_hat = back_transform(posterior_mean(d.f), st);
    if (d.f.size() >= 20) out.bands = credible_bands(d.f, level, st);
    else out.note += "; fewer than 20 f draws, bands skipped";

    if (truth.f) {
        out.normalized_mspe = normalized_mspe(f_hat, *truth.f, cells);
        if (out.bands) out.band_coverage = band_coverage(*out.bands, *truth.f, cells);
    }
    if (!held_out_y.empty() && !cells_in.empty()) {
        Eigen::MatrixXd y = Eigen::MatrixXd::Constant(f_hat.rows(), f_hat.cols(), std::nan(""));
        for (std::size_t k = 0; k < cells_in.size(); ++k)
            y(static_cast<Eigen::Index>(cells_in[k].series), static_cast<Eigen::Index>(cells_in[k].time)) = held_out_y[k];
        out.normalized_mspe_observed = normalized_mspe(f_hat, y, cells_in);
    }
    return out;
}

Summary summarize(const fs::path& draws_dir, double level, const std::optional<fs::path>& truth_dir, const fs::path& out) {
    if (!(level >= 0.0 && level < 1.0)) throw ParameterError("level must lie in [0, 1)");
    const json m = read_json(draws_dir / "manifest.json");
    if (m.value("manifest_version", 0) != kManifestVersion) throw FormatError("unsupported manifest version");
    const std::string model = m.at("model").get<std::string>();
    const auto ids = m.at("series_ids").get<std::vector<std::string>>();
    const auto times = m.at("times").get<std::vector<double>>();
    const ChainDraws d = read_draws(draws_dir, model);

    std::optional<std::vector<Standardization>> st;
    if (fs::exists(draws_dir / "standardization.csv")) st = read_standardization(draws_dir / "standardization.csv");
    std::vector<Cell> cells;
    std::vector<double> held;
    if (fs::exists(draws_dir / "holdout_truth.csv")) read_cells(draws_dir / "holdout_truth.csv", cells, held);

    Truth truth;
    if (truth_dir) {
        if (fs::exists(*truth_dir / "f_true.csv")) truth.f = load_panel(*truth_dir / "f_true.csv", PanelLayout::SeriesRows).values();
        if (fs::exists(*truth_dir / "s_true.csv")) truth.s = read_partition(*truth_dir / "s_true.csv");
        if (!truth.f && !truth.s) throw FormatError("truth directory holds neither f_true.csv nor s_true.csv");
        if (truth.f && (static_cast<std::size_t>(truth.f->rows()) != d.num_series || static_cast<std::size_t>(truth.f->cols()) != times.size()))
            throw FormatError("f_true.csv does not match the fitted panel");
        if (truth.s && truth.s->size() != d.num_series) throw FormatError("s_true.csv does not match the fitted panel");
    }

    Summary s = summarize_draws(d, level, st, truth, cells, held);
    fs::create_directories(out);
    write_matrix(s.pairwise, ids, out / "pairwise.csv");
    write_partition(s.selected.s, ids, out / "selected_partition.csv");
    const auto bpath = out / "bands.csv";
    if (s.bands) {
        std::ofstream b(bpath);
        b << "series,t,lower,mean,upper\n";
        for (Eigen::Index i = 0; i < s.bands->mean.rows(); ++i)
            for (Eigen::Index j = 0; j < s.bands->mean.cols(); ++j)
                b << ids[static_cast<std::size_t>(i)] << ',' << csv::format_number(times[static_cast<std::size_t>(j)]) << ','
                  << csv::format_number(s.bands->lower(i, j)) << ',' << csv::format_number(s.bands->mean(i, j)) << ','
                  << csv::format_number(s.bands->upper(i, j)) << '\n';
    } else {
        fs::remove(bpath);
    }

    json j;
    j["manifest_version"] = kManifestVersion;
    j["model"] = model;
    j["retained_draws"] = d.size();
    j["f_draws"] = d.f.size();
    j["level"] = level;
    j["selected_partition"] = {{"clusters", *std::max_element(s.selected.s.begin(), s.selected.s.end()) + 1},
                               {"source_iteration", s.selected.source_iteration},
                               {"source_chain", d.chain[s.selected.draw_index]},
                               {"loss", s.selected.loss}};
    json dist = json::object();
    for (const auto& [k, v] : s.clusters_distribution) dist[std::to_string(k)] = static_cast<double>(v) / static_cast<double>(d.size());
    j["clusters_distribution"] = dist;
    j["normalized_mspe"] = s.normalized_mspe ? json(*s.normalized_mspe) : json(nullptr);
    j["normalized_mspe_observed"] = s.normalized_mspe_observed ? json(*s.normalized_mspe_observed) : json(nullptr);
    j["misclustering_rate"] = s.misclustering ? json(*s.misclustering) : json(nullptr);
    j["band_coverage"] = s.band_coverage ? json(*s.band_coverage) : json(nullptr);
    j["test_cells"] = cells.size();
    j["note"] = s.note;
    write_json(j, out / "metrics.json");
    return s;
}

// ---- reproduce --------------------------------------------------------------

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::Sim1: return "sim1";
        case Experiment::Sim2: return "sim2";
        case Experiment::Ablation: return "ablation";
    }
    return "sim1";
}

Experiment experiment_from_string(const std::string& s) {
    if (s == "sim1") return Experiment::Sim1;
    if (s == "sim2") return Experiment::Sim2;
    if (s == "ablation") return Experiment::Ablation;
    throw ParameterError("unknown experiment '" + s + "' (expected sim1, sim2 or ablation)");
}

Scale scale_from_string(const std::string& s) {
    if (s == "desk") return {"desk", 30, 60, 2000, 500, 8000, 2000};
    if (s == "full") return {"full", 100, 158, 10000, 2500, 25000, 5000};
    throw ParameterError("unknown scale '" + s + "' (expected desk or full)");
}

const ModelScore& ExperimentResult::score(const std::string& label) const {
    for (const auto& s : scores)
        if (s.label == label) return s;
    throw ParameterError("no score for model '" + label + "'");
}

ExperimentResult run_experiment(Experiment e, const Scale& scale, std::uint64_t seed, const Progress& progress) {
    SynthConfig sc;
    sc.N = scale.N;
    sc.T = scale.T;
    sc.M = 3;
    sc.seed = seed;
    sc.generator = e == Experiment::Sim1 ? Generator::TwoTermSE : Generator::ProperGmrf;
    const auto data = generate(sc);
    const auto split = make_holdout(data.panel, 0.1, seed);
    const Truth truth{data.f_true, data.s_true};

    ExperimentResult result{e, seed, {}};
    auto score = [&](const std::string& label, const ChainDraws& d, double seconds) {
        const auto s = summarize_draws(d, 0.95, std::nullopt, truth, split.test_index, split.test_truth);
        ModelScore m;
        m.label = label;
        m.normalized_mspe = *s.normalized_mspe;
        m.misclustering = *s.misclustering;
        m.selected_clusters = *std::max_element(s.selected.s.begin(), s.selected.s.end()) + 1;
        m.band_coverage = s.band_coverage.value_or(std::nan(""));
        m.seconds = seconds;
        result.scores.push_back(m);
        if (progress)
            progress(to_string(e) + " seed " + std::to_string(seed) + " " + label + ": normalized MSPE " + fixed(m.normalized_mspe) +
                     ", mis-clustering " + fixed(m.misclustering) + ", " + fixed(seconds, 1) + " s");
    };
    auto timed = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto d = fn();
        return std::make_pair(std::move(d), std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
    auto gp = [&](bool clustering) {
        GpChainConfig cfg;
        cfg.iterations = scale.gp_iterations;
        cfg.burn_in = scale.gp_burn_in;
        cfg.seed = seed;
        cfg.clustering = clustering;
        return timed([&] { return to_chain_draws(run_gp_chain(split.train, cfg)); });
    };
    if (e == Experiment::Ablation) {
        auto [d1, t1] = gp(true);
        score("gp", d1, t1);
        auto [d2, t2] = gp(false);
        score("gp-unclustered", d2, t2);
    } else {
        auto [d1, t1] = gp(true);
        score("gp", d1, t1);
        IgmrfChainConfig cfg;
        cfg.iterations = scale.igmrf_iterations;
        cfg.burn_in = scale.igmrf_burn_in;
        cfg.seed = seed;
        auto [d2, t2] = timed([&] { return to_chain_draws(run_igmrf_chain(split.train, cfg)); });
        score("igmrf", d2, t2);
    }
    return result;
}

std::vector<ExperimentResult> reproduce(Experiment e, const Scale& scale, const std::vector<std::uint64_t>& seeds,
                                        const fs::path& out, const Progress& progress) {
    if (seeds.empty()) throw ParameterError("at least one seed is required");
    std::vector<ExperimentResult> results;
    for (auto seed : seeds) results.push_back(run_experiment(e, scale, seed, progress));

    fs::create_directories(out);
    json j;
    j["manifest_version"] = kManifestVersion;
    j["version"] = kVersion;
    j["command"] = "reproduce";
    j["experiment"] = to_string(e);
    j["scale"] = {{"name", scale.name}, {"N", scale.N}, {"T", scale.T}, {"gp_iterations", scale.gp_iterations},
                  {"gp_burn_in", scale.gp_burn_in}, {"igmrf_iterations", scale.igmrf_iterations},
                  {"igmrf_burn_in", scale.igmrf_burn_in}};
    j["holdout_fraction"] = 0.1;
    j["results"] = json::array();
    std::ostringstream md;
    md << "# " << to_string(e) << " (" << scale.name << " scale: N=" << scale.N << ", T=" << scale.T << ")\n\n";
    md << "| seed | model | normalized MSPE | mis-clustering | clusters | 95% band coverage | seconds |\n";
    md << "|---|---|---|---|---|---|---|\n";
    std::map<std::string, std::pair<double, double>> totals;
    std::vector<std::string> order;
    for (const auto& r : results) {
        for (const auto& s : r.scores) {
            j["results"].push_back({{"seed", r.seed}, {"model", s.label}, {"normalized_mspe", s.normalized_mspe},
                                    {"misclustering", s.misclustering}, {"selected_clusters", s.selected_clusters},
                                    {"band_coverage", std::isnan(s.band_coverage) ? json(nullptr) : json(s.band_coverage)},
                                    {"seconds", s.seconds}});
            md << "| " << r.seed << " | " << s.label << " | " << fixed(s.normalized_mspe) << " | " << fixed(s.misclustering)
               << " | " << s.selected_clusters << " | " << fixed(s.band_coverage) << " | " << fixed(s.seconds, 1) << " |\n";
            if (!totals.count(s.label)) order.push_back(s.label);
            totals[s.label].first += s.normalized_mspe;
            totals[s.label].second += s.misclustering;
        }
    }
    md << "\n| model | mean normalized MSPE | mean mis-clustering |\n|---|---|---|\n";
    const double n = static_cast<double>(results.size());
    for (const auto& label : order)
        md << "| " << label << " | " << fixed(totals[label].first / n) << " | " << fixed(totals[label].second / n) << " |\n";
    write_json(j, out / "report.json");
    std::ofstream(out / "report.md") << md.str();
    return results;
}

}  // namespace growfn::workflow
