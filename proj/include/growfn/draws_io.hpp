#pragma once

#include "growfn/gp_sampler.hpp"
#include "growfn/igmrf_sampler.hpp"
#include "growfn/panel.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace growfn {

/// Model-agnostic view of retained draws, pooled over one or more chains.
struct ChainDraws {
    std::string model;                        // "gp" or "igmrf"
    std::vector<std::string> location_names;  // theta1..theta3 or kappa
    std::size_t num_series = 0;
    std::size_t num_times = 0;
    std::vector<int> chain;
    std::vector<int> iteration;
    std::vector<std::vector<int>> s;
    /// draw -> cluster -> location components
    std::vector<std::vector<std::vector<double>>> locations;
    std::vector<double> alpha;
    std::vector<double> tau_eps;
    std::vector<int> f_chain;
    std::vector<int> f_iteration;
    std::vector<Eigen::MatrixXd> f;

    std::size_t size() const { return iteration.size(); }
    /// Appends the draws of another chain of the same model and shape.
    void append(const ChainDraws& other);
};

ChainDraws to_chain_draws(const GpDraws& d, int chain = 0);
ChainDraws to_chain_draws(const IgmrfDraws& d, int chain = 0);

/// Writes draws_assignments.csv, draws_locations.csv, draws_scalars.csv and,
/// when f draws exist, draws_f.csv into dir. Labels are written 1-based.
void write_draws(const ChainDraws& d, const std::filesystem::path& dir);
/// Reads the tables written by write_draws. Throws FormatError when a table is missing or malformed.
ChainDraws read_draws(const std::filesystem::path& dir, const std::string& model);

/// Test cells of a holdout split as (series, t, value), t 1-based.
void write_cells(const std::vector<Cell>& cells, const std::vector<double>& values, const std::filesystem::path& path);
void read_cells(const std::filesystem::path& path, std::vector<Cell>& cells, std::vector<double>& values);

/// Plain numeric matrix with a header row of column names.
void write_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& header, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path, bool has_header = true);

/// (series_id, cluster) rows with 1-based clusters.
void write_partition(const std::vector<int>& s, const std::vector<std::string>& ids, const std::filesystem::path& path);
std::vector<int> read_partition(const std::filesystem::path& path);

void write_standardization(const std::vector<Standardization>& st, const std::vector<std::string>& ids,
                           const std::filesystem::path& path);
std::vector<Standardization> read_standardization(const std::filesystem::path& path);

}  // namespace growfn
