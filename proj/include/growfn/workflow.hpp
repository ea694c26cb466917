#pragma once

#include "growfn/draws_io.hpp"
#include "growfn/gp_sampler.hpp"
#include "growfn/igmrf_sampler.hpp"
#include "growfn/panel.hpp"
#include "growfn/summary.hpp"
#include "growfn/synthgen.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

/// End-to-end operations behind the command-line tool.
namespace growfn::workflow {

namespace fs = std::filesystem;

inline constexpr int kManifestVersion = 1;

enum class Model { Gp, Igmrf };
std::string to_string(Model m);
Model model_from_string(const std::string& s);

/// Worker cap from GROWFN_THREADS, else the hardware concurrency (at least 1).
int thread_limit();

/// Seed of chain c; chain 0 keeps the base seed.
std::uint64_t chain_seed(std::uint64_t seed, int chain);

// ---- simulate ---------------------------------------------------------------

/// Writes panel.csv, f_true.csv (series-rows), s_true.csv, locations_true.csv and manifest.json.
SyntheticData simulate(const SynthConfig& cfg, const fs::path& out);

// ---- fit --------------------------------------------------------------------

struct FitOptions {
    Model model = Model::Gp;
    GpChainConfig gp;
    IgmrfChainConfig igmrf;
    double holdout = 0.0;  // 0 disables
    std::uint64_t holdout_seed = 1;
    int chains = 1;
    bool standardize = false;
};

struct FitResult {
    ChainDraws draws;
    Panel train;
    std::optional<HoldoutSplit> split;
    std::vector<double> acceptance;  // per GP chain
    std::string regime;
    std::vector<int> ladder;
};

/// Holdout, optional standardization of the training panel, then k chains pooled.
FitResult fit_panel(const Panel& panel, const FitOptions& opt);

/// fit_panel on a CSV file; writes draws, manifest.json and the holdout sidecar.
FitResult fit(const fs::path& input, PanelLayout layout, const FitOptions& opt, const fs::path& out,
              const std::vector<std::string>& argv = {});

// ---- summarize --------------------------------------------------------------

struct Truth {
    std::optional<Eigen::MatrixXd> f;  // response units
    std::optional<Partition> s;
};

struct Summary {
    Eigen::MatrixXd pairwise;
    SelectedPartition selected;
    std::optional<CredibleBands> bands;
    std::map<int, int> clusters_distribution;
    std::optional<double> normalized_mspe;           // against true f
    std::optional<double> normalized_mspe_observed;  // against held-out y
    std::optional<double> misclustering;
    std::optional<double> band_coverage;
    std::string note;
};

/// cells may be empty, in which case f metrics use every cell of the panel.
Summary summarize_draws(const ChainDraws& d, double level, const std::optional<std::vector<Standardization>>& st,
                        const Truth& truth, const std::vector<Cell>& cells, const std::vector<double>& held_out_y);

/// Reads a fit directory (and optionally a simulate directory holding the truth);
/// writes pairwise.csv, selected_partition.csv, bands.csv and metrics.json to out.
Summary summarize(const fs::path& draws_dir, double level, const std::optional<fs::path>& truth_dir, const fs::path& out);

// ---- reproduce --------------------------------------------------------------

enum class Experiment { Sim1, Sim2, Ablation };
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct Scale {
    std::string name;
    std::size_t N;
    std::size_t T;
    int gp_iterations;
    int gp_burn_in;
    int igmrf_iterations;
    int igmrf_burn_in;
};
Scale scale_from_string(const std::string& s);

struct ModelScore {
    std::string label;
    double normalized_mspe = 0.0;
    double misclustering = 0.0;
    int selected_clusters = 0;
    double band_coverage = 0.0;
    double seconds = 0.0;
};

struct ExperimentResult {
    Experiment experiment;
    std::uint64_t seed;
    std::vector<ModelScore> scores;
    const ModelScore& score(const std::string& label) const;
};

using Progress = std::function<void(const std::string&)>;

/// Simulate, hold out 10% of cells, fit the relevant models and score them.
ExperimentResult run_experiment(Experiment e, const Scale& scale, std::uint64_t seed, const Progress& progress = {});

/// run_experiment over seeds; writes report.md and report.json to out.
std::vector<ExperimentResult> reproduce(Experiment e, const Scale& scale, const std::vector<std::uint64_t>& seeds,
                                        const fs::path& out, const Progress& progress = {});

}  // namespace growfn::workflow
