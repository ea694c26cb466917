#pragma once

#include "growfn/kernels.hpp"
#include "growfn/panel.hpp"
#include "growfn/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace growfn {

enum class Generator { TwoTermSE, ProperGmrf };

std::string to_string(Generator g);
Generator generator_from_string(const std::string& s);

/// Columns are clusters; rows are (theta_1m1, theta_1m2, theta_2m1, theta_2m2):
/// vertical and length scale of the long term, then of the short term.
Eigen::Matrix<double, 4, Eigen::Dynamic> default_two_term_locations();

struct SynthConfig {
    std::size_t N = 100;
    std::size_t T = 158;
    std::size_t M = 3;
    double noise_to_signal = 0.20;
    std::uint64_t seed = 1;
    Generator generator = Generator::TwoTermSE;
    /// Two-term SE locations (4 x M); unset draws them from the hyperpriors
    /// unless M == 3, where the published table is used.
    std::optional<Eigen::MatrixXd> se_locations;
    bool se_from_hyperpriors = false;
    double rho = 0.95;
    /// Proper-GMRF precisions; unset draws Ga(1, 1).
    std::optional<std::vector<double>> kappas;

    void validate() const;
};

struct SyntheticData {
    Panel panel;
    Eigen::MatrixXd f_true;
    std::vector<int> s_true;  // 0-based
    /// 4 x M for two-term SE, 1 x M for proper GMRF.
    Eigen::MatrixXd locations_true;
    double tau_eps_true;
};

SyntheticData gen_two_term_se(const SynthConfig& cfg);
SyntheticData gen_proper_gmrf(const SynthConfig& cfg);
SyntheticData generate(const SynthConfig& cfg);

/// Cell (i, j) is true iff series i and j share a cluster.
BoolMatrix misclustering_truth_table(const std::vector<int>& s);

}  // namespace growfn
