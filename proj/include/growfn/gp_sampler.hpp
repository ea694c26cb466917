#pragma once

#include "growfn/dp_core.hpp"
#include "growfn/kernels.hpp"
#include "growfn/panel.hpp"
#include "growfn/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace growfn {

/// Marginalized: f integrated out, tau_eps moved by tempered transitions.
/// CoSampled: f drawn in a Gibbs step, tau_eps by its gamma conditional.
/// Auto picks CoSampled exactly when the panel has missing cells.
enum class GpRegime { Auto, Marginalized, CoSampled };

std::string to_string(GpRegime r);
GpRegime gp_regime_from_string(const std::string& s);

struct GpChainConfig {
    int iterations = 2000;
    int burn_in = 500;
    int thin = 1;
    int c_star = 3;
    /// Time-subset sizes of the coarse levels; default_ladder(T) when unset.
    std::optional<std::vector<int>> ladder;
    double slice_width = 1.0;
    std::array<GammaPrior, 3> theta_prior{GammaPrior{1.0, 1.0}, GammaPrior{1.0, 1.0}, GammaPrior{1.0, 1.0}};
    GammaPrior tau_prior{1.0, 1.0};
    GammaPrior alpha_prior{1.0, 1.0};
    std::uint64_t seed = 1;
    GpRegime regime = GpRegime::Auto;
    /// false pins alpha to 0 and keeps a single cluster (the global-theta model).
    bool clustering = true;
    bool store_f = true;
    /// Keep f from every f_thin-th retained draw only.
    int f_thin = 1;
    /// Number of clusters the chain starts from (round-robin allocation).
    int init_clusters = 1;

    /// Throws ParameterError when inconsistent with a panel of T time points.
    void validate(std::size_t T) const;
    std::vector<int> resolved_ladder(std::size_t T) const;
};

/// (100, 60) for T = 158, otherwise (ceil(0.63 T), ceil(0.38 T)) with entries below 5 dropped.
std::vector<int> default_ladder(std::size_t T);

struct GpDraws {
    std::size_t num_series = 0;
    std::size_t num_times = 0;
    GpRegime regime = GpRegime::Marginalized;
    std::vector<int> ladder;
    std::vector<int> iteration;  // 1-based iteration number of each retained draw
    std::vector<std::vector<int>> s;
    std::vector<std::vector<RQParams>> locations;
    std::vector<double> alpha;
    std::vector<double> tau_eps;
    std::vector<Eigen::MatrixXd> f;  // empty unless store_f
    std::vector<int> f_iteration;
    // one entry per iteration, burn-in included
    std::vector<int> clusters_trace;
    std::vector<int> tempered_accepted;
    std::vector<int> tempered_attempted;

    double acceptance_rate() const;
};

/// Sum over series of log N_T(y | 0, C(theta) + I/tau_eps), 2 pi constant included.
/// Throws NumericError when the covariance cannot be factorized.
double gp_marginal_loglik(std::span<const Eigen::VectorXd> ys, const RQParams& theta, double tau_eps,
                          std::span<const double> times);

struct GaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Mean C (C + I/tau)^{-1} y and covariance C - C (C + I/tau)^{-1} C of f given y.
GaussianMoments predictive_moments(const Eigen::VectorXd& y, const RQParams& theta, double tau_eps,
                                   std::span<const double> times);

/// One draw of f given fully observed y (see predictive_moments).
Eigen::VectorXd predictive_f_draw(const Eigen::VectorXd& y, const RQParams& theta, double tau_eps,
                                  std::span<const double> times, Rng& rng);

/// Draw from N(phi^{-1} e, phi^{-1}) with phi = tau P + C^{-1}, e = tau P y and P
/// the projector on observed_idx, computed through the observed-block identity
/// f = f0 + C[:,O] (C[O,O] + I/tau)^{-1} (y_O - f0_O - eps), f0 ~ N(0, C).
/// prior_factor is a Cholesky factor of C (plus jitter).
Eigen::VectorXd conditional_f_draw(const Eigen::VectorXd& y, std::span<const Eigen::Index> observed_idx,
                                   const Eigen::MatrixXd& C, const Cholesky& prior_factor, double tau_eps, Rng& rng);

/// Posterior sampler for the Dirichlet-process mixture of Gaussian processes.
///
/// Each step of the scan is exposed so that it can be exercised alone; run()
/// performs locations(+tau) -> assignments -> alpha -> f per iteration.
class GpSampler {
public:
    GpSampler(const Panel& panel, GpChainConfig cfg);

    GpRegime regime() const { return regime_; }
    const std::vector<int>& ladder() const { return ladder_; }
    std::size_t num_levels() const { return level_sets_.size(); }

    const ClusterState<RQParams>& state() const { return state_; }
    void set_state(ClusterState<RQParams> st);
    double tau() const { return tau_; }
    void set_tau(double tau) { tau_ = tau; }
    const Eigen::MatrixXd& f() const { return f_; }
    void set_f(Eigen::MatrixXd f) { f_ = std::move(f); }
    Rng& rng() { return rng_; }

    /// Log-likelihood of the member series under theta at ladder level (0 = all times).
    /// Returns -inf when the covariance cannot be factorized.
    double cluster_loglik(std::span<const std::size_t> members, const RQParams& theta, std::size_t level) const;
    /// Same for the noise-precision update: all clusters, given tau.
    double total_loglik(double tau, std::size_t level) const;

    void update_locations_and_tau();
    void assignment_sweep();
    void update_alpha();
    /// Predictive draw (marginalized) or Gibbs co-sampling of f and tau (co-sampled).
    void update_f();
    /// One full scan.
    void iterate();

    int accepted() const { return accepted_; }
    int attempted() const { return attempted_; }

    GpDraws run();

private:
    struct Pattern {
        std::vector<Eigen::Index> idx;
        std::vector<double> times;
    };

    double noise_variance(const RQParams& theta, double tau) const;
    double series_loglik(std::size_t i, std::size_t level, const Cholesky& factor) const;
    std::optional<Cholesky> factor_for(const RQParams& theta, double noise_var, std::size_t level, std::size_t pattern) const;
    std::vector<std::vector<std::size_t>> members() const;
    RQParams draw_base(Rng& rng) const;
    void draw_f_all();

    Panel panel_;
    GpChainConfig cfg_;
    GpRegime regime_;
    std::vector<int> ladder_;
    std::vector<double> times_;
    std::size_t N_;
    std::size_t T_;
    std::vector<std::vector<Eigen::Index>> level_sets_;
    // level -> patterns, level -> series -> pattern id
    std::vector<std::vector<Pattern>> patterns_;
    std::vector<std::vector<std::size_t>> pattern_of_;
    std::vector<std::vector<Eigen::Index>> observed_;

    ClusterState<RQParams> state_;
    double tau_ = 1.0;
    Eigen::MatrixXd f_;
    Rng rng_;
    int accepted_ = 0;
    int attempted_ = 0;
};

GpDraws run_gp_chain(const Panel& panel, const GpChainConfig& cfg);

}  // namespace growfn
