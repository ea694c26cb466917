#include "growfn/igmrf_sampler.hpp"

#include "growfn/error.hpp"
#include "growfn/noise.hpp"

#include <cmath>
#include <numbers>

namespace growfn {

std::string to_string(IgmrfFUpdate u) { return u == IgmrfFUpdate::Block ? "block" : "single-site"; }

IgmrfFUpdate igmrf_f_update_from_string(const std::string& s) {
    if (s == "block") return IgmrfFUpdate::Block;
    if (s == "single-site") return IgmrfFUpdate::SingleSite;
    throw ParameterError("unknown f update '" + s + "' (expected block or single-site)");
}

void IgmrfChainConfig::validate() const {
    if (iterations < 1) throw ParameterError("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw ParameterError("burn_in must satisfy 0 <= burn_in < iterations");
    if (thin < 1) throw ParameterError("thin must be positive");
    if (f_thin < 1) throw ParameterError("f_thin must be positive");
    for (const auto* g : {&kappa_prior, &tau_prior, &alpha_prior})
        if (!(g->shape > 0.0 && g->rate > 0.0)) throw ParameterError("gamma priors need positive shape and rate");
}

Rw2Stencil::Rw2Stencil(const PrecisionStructure& s) {
    const auto T = s.size();
    diag_.resize(static_cast<std::size_t>(T));
    nbrs_.resize(static_cast<std::size_t>(T));
    for (Eigen::Index j = 0; j < T; ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(s.Q, j); it; ++it) {
            if (it.row() == j) diag_[static_cast<std::size_t>(j)] = it.value();
            else nbrs_[static_cast<std::size_t>(j)].emplace_back(it.row(), it.value());
        }
        log_const_ += 0.5 * std::log(diag_[static_cast<std::size_t>(j)] / (2.0 * std::numbers::pi));
    }
}

double Rw2Stencil::conditional_mean(const Eigen::Ref<const Eigen::RowVectorXd>& f, Eigen::Index j) const {
    double acc = 0.0;
    for (const auto& [k, q] : nbrs_[static_cast<std::size_t>(j)]) acc += q * f(k);
    return -acc / diag_[static_cast<std::size_t>(j)];
}

std::vector<std::pair<Eigen::Index, double>> Rw2Stencil::weights(Eigen::Index j) const {
    std::vector<std::pair<Eigen::Index, double>> out;
    for (const auto& [k, q] : nbrs_[static_cast<std::size_t>(j)]) out.emplace_back(k, -q / diag_[static_cast<std::size_t>(j)]);
    return out;
}

double Rw2Stencil::quad_form_by_conditionals(const Eigen::Ref<const Eigen::RowVectorXd>& f) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < size(); ++j) acc += diag(j) * f(j) * (f(j) - conditional_mean(f, j));
    return acc;
}

double Rw2Stencil::quad_form(const Eigen::Ref<const Eigen::RowVectorXd>& f) const {
    // Sum of squared second differences, the same form without the conditional detour.
    double acc = 0.0;
    for (Eigen::Index j = 0; j + 2 < size(); ++j) {
        const double d = f(j) - 2.0 * f(j + 1) + f(j + 2);
        acc += d * d;
    }
    return acc;
}

void gibbs_f_sweep(Eigen::MatrixXd& f, const Panel& panel, const std::vector<int>& s, const std::vector<double>& kappas,
                   double tau_eps, const Rw2Stencil& stencil, Rng& rng) {
    const auto& y = panel.values();
    const auto& mask = panel.mask();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double kappa = kappas[static_cast<std::size_t>(s[static_cast<std::size_t>(i)])];
        for (Eigen::Index j = 0; j < f.cols(); ++j) {
            const double qjj = stencil.diag(j);
            const double fbar = stencil.conditional_mean(f.row(i), j);
            double e = qjj * kappa * fbar;
            double phi = qjj * kappa;
            if (mask(i, j)) {
                e += tau_eps * y(i, j);
                phi += tau_eps;
            }
            f(i, j) = e / phi + rng.normal() / std::sqrt(phi);
        }
    }
}

BlockFSampler::BlockFSampler(const PrecisionStructure& s) {
    // Double transposition leaves the inner indices sorted.
    const Eigen::SparseMatrix<double> t = s.Q.transpose();
    Q_ = t.transpose();
    Eigen::SparseMatrix<double> I(Q_.rows(), Q_.cols());
    I.setIdentity();
    A_ = Q_ + I;
    A_.makeCompressed();
    llt_.analyzePattern(A_);
}

void BlockFSampler::draw(Eigen::MatrixXd& f, const Panel& panel, const std::vector<int>& s,
                         const std::vector<double>& kappas, double tau_eps, Rng& rng) {
    const auto T = Q_.rows();
    const auto& y = panel.values();
    const auto& mask = panel.mask();
    Eigen::VectorXd b(T), z(T);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double kappa = kappas[static_cast<std::size_t>(s[static_cast<std::size_t>(i)])];
        // A_ shares the sparsity pattern of Q_ + I, so values can be rewritten in place.
        for (Eigen::Index k = 0; k < A_.outerSize(); ++k) {
            Eigen::SparseMatrix<double>::InnerIterator a(A_, k);
            Eigen::SparseMatrix<double>::InnerIterator q(Q_, k);
            for (; a; ++a) {
                double v = 0.0;
                if (q && q.row() == a.row()) {
                    v = kappa * q.value();
                    ++q;
                }
                if (a.row() == k && mask(i, k)) v += tau_eps;
                a.valueRef() = v;
            }
        }
        llt_.factorize(A_);
        if (llt_.info() != Eigen::Success) throw NumericError("f conditional precision is not positive definite");
        for (Eigen::Index j = 0; j < T; ++j) {
            b(j) = mask(i, j) ? tau_eps * y(i, j) : 0.0;
            z(j) = rng.normal();
        }
        const Eigen::VectorXd mean = llt_.solve(b);
        f.row(i) = (mean + llt_.matrixU().solve(z)).transpose();
    }
}

double kappa_shape(std::size_t n_members, std::size_t T, const GammaPrior& prior) {
    return prior.shape + 0.5 * static_cast<double>(n_members) * (static_cast<double>(T) - 2.0);
}

std::vector<double> gibbs_kappa_update(const Eigen::MatrixXd& f, const ClusterState<double>& state,
                                       const Rw2Stencil& stencil, const GammaPrior& prior, Rng& rng) {
    const std::size_t M = state.num_clusters();
    std::vector<double> rate(M, prior.rate);
    for (std::size_t i = 0; i < state.s.size(); ++i)
        rate[static_cast<std::size_t>(state.s[i])] += 0.5 * stencil.quad_form(f.row(static_cast<Eigen::Index>(i)));
    std::vector<double> out(M);
    const auto T = static_cast<std::size_t>(f.cols());
    for (std::size_t m = 0; m < M; ++m)
        out[m] = rng.gamma(kappa_shape(static_cast<std::size_t>(state.counts[m]), T, prior), rate[m]);
    return out;
}

double igmrf_series_loglik(double kappa, double quad, std::size_t T, const Rw2Stencil& stencil) {
    return stencil.log_const() + 0.5 * (static_cast<double>(T) - 2.0) * std::log(kappa) - 0.5 * kappa * quad;
}

double igmrf_log_marginal(double quad, std::size_t T, const Rw2Stencil& stencil, const GammaPrior& prior) {
    const double shape = kappa_shape(1, T, prior);
    const double rate = prior.rate + 0.5 * quad;
    return stencil.log_const() + prior.shape * std::log(prior.rate) + std::lgamma(shape) - std::lgamma(prior.shape) -
           shape * std::log(rate);
}

void igmrf_assignment_sweep(ClusterState<double>& state, const Eigen::MatrixXd& f, const Rw2Stencil& stencil,
                            const GammaPrior& prior, Rng& rng) {
    const auto T = static_cast<std::size_t>(f.cols());
    std::vector<double> quad(state.s.size());
    for (std::size_t i = 0; i < quad.size(); ++i) quad[i] = stencil.quad_form(f.row(static_cast<Eigen::Index>(i)));
    conjugate_sweep(
        state, [&](std::size_t i, std::size_t m) { return igmrf_series_loglik(state.locations[m], quad[i], T, stencil); },
        [&](std::size_t i) { return igmrf_log_marginal(quad[i], T, stencil, prior); },
        [&](std::size_t i, Rng& r) { return r.gamma(kappa_shape(1, T, prior), prior.rate + 0.5 * quad[i]); }, rng);
}

IgmrfDraws run_igmrf_chain(const Panel& panel, const IgmrfChainConfig& cfg) {
    cfg.validate();
    const std::size_t N = panel.num_series();
    const std::size_t T = panel.num_times();
    const auto structure = rw2_structure(static_cast<int>(T));
    const Rw2Stencil stencil(structure);
    BlockFSampler block(structure);
    Rng rng(cfg.seed);

    // Start f at the data, with missing cells at the series mean.
    Eigen::MatrixXd f(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(T));
    double var_total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto idx = panel.observed_indices(i);
        double mean = 0.0;
        for (auto j : idx) mean += panel.values()(row, j);
        mean /= static_cast<double>(idx.size());
        double ss = 0.0;
        for (auto j : idx) ss += (panel.values()(row, j) - mean) * (panel.values()(row, j) - mean);
        var_total += idx.size() > 1 ? ss / static_cast<double>(idx.size() - 1) : 1.0;
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(T); ++j)
            f(row, j) = panel.observed(i, static_cast<std::size_t>(j)) ? panel.values()(row, j) : mean;
    }
    const double v = var_total > 0.0 ? var_total / static_cast<double>(N) : 1.0;

    double quad_total = 0.0;
    for (std::size_t i = 0; i < N; ++i) quad_total += stencil.quad_form(f.row(static_cast<Eigen::Index>(i)));
    const double kappa0 = quad_total > 0.0 ? static_cast<double>(N) * (static_cast<double>(T) - 2.0) / quad_total : 1.0;
    auto state = ClusterState<double>::single(N, kappa0, cfg.clustering ? 1.0 : 0.0);
    double tau = 2.0 / v;

    IgmrfDraws d;
    d.num_series = N;
    d.num_times = T;
    for (int it = 1; it <= cfg.iterations; ++it) {
        try {
            if (cfg.f_update == IgmrfFUpdate::Block) block.draw(f, panel, state.s, state.locations, tau, rng);
            else gibbs_f_sweep(f, panel, state.s, state.locations, tau, stencil, rng);
            state.locations = gibbs_kappa_update(f, state, stencil, cfg.kappa_prior, rng);
            if (cfg.clustering) {
                igmrf_assignment_sweep(state, f, stencil, cfg.kappa_prior, rng);
#ifndef NDEBUG
                state.check_invariants();
#endif
                state.alpha = resample_alpha(state.alpha, state.num_clusters(), N, cfg.alpha_prior, rng);
            }
            tau = draw_noise_precision(panel, f, cfg.tau_prior, rng);
        } catch (const NumericError& e) {
            throw NumericError("iGMRF chain iteration " + std::to_string(it) + ": " + e.what());
        }
        d.clusters_trace.push_back(static_cast<int>(state.num_clusters()));
        const bool keep = it > cfg.burn_in && (it - cfg.burn_in - 1) % cfg.thin == 0;
        if (!keep) continue;
        if (cfg.store_f && d.iteration.size() % static_cast<std::size_t>(cfg.f_thin) == 0) {
            d.f.push_back(f);
            d.f_iteration.push_back(it);
        }
        d.iteration.push_back(it);
        d.s.push_back(state.s);
        d.kappa.push_back(state.locations);
        d.alpha.push_back(state.alpha);
        d.tau_eps.push_back(tau);
    }
    return d;
}

}  // namespace growfn
