#pragma once

#include "growfn/dp_core.hpp"
#include "growfn/kernels.hpp"
#include "growfn/panel.hpp"
#include "growfn/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <string>
#include <vector>

namespace growfn {

/// Block: each f_i drawn jointly from its Gaussian conditional (banded Cholesky).
/// SingleSite: raster-order single-site Gibbs sweep.
enum class IgmrfFUpdate { Block, SingleSite };

std::string to_string(IgmrfFUpdate u);
IgmrfFUpdate igmrf_f_update_from_string(const std::string& s);

struct IgmrfChainConfig {
    int iterations = 8000;
    int burn_in = 2000;
    int thin = 1;
    std::uint64_t seed = 1;
    GammaPrior kappa_prior{1.0, 0.1};
    GammaPrior tau_prior{1.0, 1.0};
    GammaPrior alpha_prior{1.0, 1.0};
    bool clustering = true;
    bool store_f = true;
    /// Keep f from every f_thin-th retained draw only.
    int f_thin = 1;
    IgmrfFUpdate f_update = IgmrfFUpdate::Block;

    void validate() const;
};

struct IgmrfDraws {
    std::size_t num_series = 0;
    std::size_t num_times = 0;
    std::vector<int> iteration;
    std::vector<std::vector<int>> s;
    std::vector<std::vector<double>> kappa;
    std::vector<double> alpha;
    std::vector<double> tau_eps;
    std::vector<Eigen::MatrixXd> f;
    std::vector<int> f_iteration;
    std::vector<int> clusters_trace;
};

/// Neighbour lists of an RW2 precision: for each j, Q_jj and the off-diagonal (k, Q_jk).
class Rw2Stencil {
public:
    explicit Rw2Stencil(const PrecisionStructure& s);

    Eigen::Index size() const { return static_cast<Eigen::Index>(diag_.size()); }
    /// -(1/Q_jj) sum_{k ~ j} Q_jk f_k.
    double conditional_mean(const Eigen::Ref<const Eigen::RowVectorXd>& f, Eigen::Index j) const;
    double diag(Eigen::Index j) const { return diag_[static_cast<std::size_t>(j)]; }
    /// Conditional-mean weights -Q_jk / Q_jj of the neighbours of j.
    std::vector<std::pair<Eigen::Index, double>> weights(Eigen::Index j) const;
    /// sum_j Q_jj f_j (f_j - fbar_j), which equals f' Q f.
    double quad_form_by_conditionals(const Eigen::Ref<const Eigen::RowVectorXd>& f) const;
    double quad_form(const Eigen::Ref<const Eigen::RowVectorXd>& f) const;
    /// Sum_j 0.5 log(Q_jj / 2 pi): the constant shared by every per-series likelihood.
    double log_const() const { return log_const_; }

private:
    std::vector<double> diag_;
    std::vector<std::vector<std::pair<Eigen::Index, double>>> nbrs_;
    double log_const_ = 0.0;
};

/// Single-site Gibbs sweep over every f_ij in raster order (series outer, time inner).
void gibbs_f_sweep(Eigen::MatrixXd& f, const Panel& panel, const std::vector<int>& s, const std::vector<double>& kappas,
                   double tau_eps, const Rw2Stencil& stencil, Rng& rng);

/// Joint draw of every row f_i from N(A^{-1} tau P_i y_i, A^{-1}), A = tau P_i + kappa_{s_i} Q,
/// with P_i the diagonal indicator of observed cells.
class BlockFSampler {
public:
    explicit BlockFSampler(const PrecisionStructure& s);
    void draw(Eigen::MatrixXd& f, const Panel& panel, const std::vector<int>& s, const std::vector<double>& kappas,
              double tau_eps, Rng& rng);

private:
    Eigen::SparseMatrix<double> Q_;
    Eigen::SparseMatrix<double> A_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> llt_;
};

/// Shape a + n_m (T - 2) / 2 of the kappa conditional.
double kappa_shape(std::size_t n_members, std::size_t T, const GammaPrior& prior);

/// kappa_m ~ Ga(a + n_m (T-2)/2, b + 0.5 sum_{i in m} f_i' Q f_i), independently per cluster.
std::vector<double> gibbs_kappa_update(const Eigen::MatrixXd& f, const ClusterState<double>& state,
                                       const Rw2Stencil& stencil, const GammaPrior& prior, Rng& rng);

/// Per-series log-likelihood of kappa: log_const + (T-2)/2 log kappa - kappa q / 2, q = f' Q f.
double igmrf_series_loglik(double kappa, double quad, std::size_t T, const Rw2Stencil& stencil);
/// Log of the likelihood integrated against the gamma base measure.
double igmrf_log_marginal(double quad, std::size_t T, const Rw2Stencil& stencil, const GammaPrior& prior);

/// Conjugate Polya-urn reassignment of every series; compacts clusters.
void igmrf_assignment_sweep(ClusterState<double>& state, const Eigen::MatrixXd& f, const Rw2Stencil& stencil,
                            const GammaPrior& prior, Rng& rng);

IgmrfDraws run_igmrf_chain(const Panel& panel, const IgmrfChainConfig& cfg);

}  // namespace growfn
