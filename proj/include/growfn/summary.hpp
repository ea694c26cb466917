#pragma once

#include "growfn/panel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace growfn {

using Partition = std::vector<int>;

/// Entry (i, j) is the fraction of draws placing series i and j together.
Eigen::MatrixXd pairwise_probability(std::span<const Partition> draws);

struct SelectedPartition {
    Partition s;
    std::size_t draw_index = 0;
    int source_iteration = 0;
    double loss = 0.0;
};

/// Squared distance between the association matrix of s and pw.
double dahl_loss(const Partition& s, const Eigen::MatrixXd& pw);

/// Retained draw closest to pw, earliest draw on ties. iterations, when
/// given, supplies source_iteration; otherwise the 1-based draw index is used.
SelectedPartition dahl_select(std::span<const Partition> draws, const Eigen::MatrixXd& pw,
                              std::span<const int> iterations = {});

/// Fraction of the N(N-1) off-diagonal pairs on which the two partitions disagree.
double misclustering_rate(const Partition& est, const Partition& truth);

/// Mean squared error over cells divided by the population variance of f_true there.
double normalized_mspe(const Eigen::MatrixXd& f_hat, const Eigen::MatrixXd& f_true, std::span<const Cell> cells);
/// Same, with f_hat the posterior mean of the draws.
double normalized_mspe(std::span<const Eigen::MatrixXd> f_draws, const Eigen::MatrixXd& f_true,
                       std::span<const Cell> cells);

Eigen::MatrixXd posterior_mean(std::span<const Eigen::MatrixXd> draws);

struct CredibleBands {
    double level = 0.95;
    Eigen::MatrixXd lower;
    Eigen::MatrixXd mean;
    Eigen::MatrixXd upper;
};

/// Pointwise quantiles at (1 -/+ level)/2 and the mean; needs at least 20 draws.
/// With standardization metadata every entry is mapped back to response units.
CredibleBands credible_bands(std::span<const Eigen::MatrixXd> f_draws, double level,
                             const std::optional<std::vector<Standardization>>& standardization = std::nullopt);

/// Linear-interpolation (type 7) sample quantile of an unsorted copy.
double quantile(std::vector<double> values, double p);

/// Fraction of cells whose true value lies inside [lower, upper].
double band_coverage(const CredibleBands& bands, const Eigen::MatrixXd& f_true, std::span<const Cell> cells);

}  // namespace growfn
