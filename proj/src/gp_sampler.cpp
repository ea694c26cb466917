#include "growfn/gp_sampler.hpp"

#include "growfn/error.hpp"
#include "growfn/noise.hpp"
#include "growfn/tempered.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace growfn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// exp() of a log-scale coordinate beyond this is treated as outside the support.
constexpr double kMaxLogScale = 300.0;

double gaussian_logpdf(const Cholesky& factor, const Eigen::VectorXd& y) {
    return -0.5 * (factor.log_det() + factor.quad_form(y) + static_cast<double>(y.size()) * kLog2Pi);
}

double mean_series_variance(const Panel& p) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < p.num_series(); ++i) {
        const auto idx = p.observed_indices(i);
        if (idx.size() < 2) continue;
        double mean = 0.0;
        for (auto j : idx) mean += p.values()(static_cast<Eigen::Index>(i), j);
        mean /= static_cast<double>(idx.size());
        double ss = 0.0;
        for (auto j : idx) {
            const double d = p.values()(static_cast<Eigen::Index>(i), j) - mean;
            ss += d * d;
        }
        total += ss / static_cast<double>(idx.size() - 1);
        ++used;
    }
    const double v = used ? total / static_cast<double>(used) : 1.0;
    return v > 0.0 && std::isfinite(v) ? v : 1.0;
}

}  // namespace

std::string to_string(GpRegime r) {
    switch (r) {
        case GpRegime::Auto: return "auto";
        case GpRegime::Marginalized: return "marginalized";
        case GpRegime::CoSampled: return "cosampled";
    }
    return "auto";
}

GpRegime gp_regime_from_string(const std::string& s) {
    if (s == "auto") return GpRegime::Auto;
    if (s == "marginalized") return GpRegime::Marginalized;
    if (s == "cosampled") return GpRegime::CoSampled;
    throw ParameterError("unknown GP regime '" + s + "' (expected auto, marginalized or cosampled)");
}

std::vector<int> default_ladder(std::size_t T) {
    if (T == 158) return {100, 60};
    std::vector<int> out;
    for (double frac : {0.63, 0.38}) {
        const int k = static_cast<int>(std::ceil(frac * static_cast<double>(T)));
        if (k >= 5 && k < static_cast<int>(T) && (out.empty() || k < out.back())) out.push_back(k);
    }
    return out;
}

std::vector<int> GpChainConfig::resolved_ladder(std::size_t T) const {
    return ladder ? *ladder : default_ladder(T);
}

void GpChainConfig::validate(std::size_t T) const {
    if (iterations < 1) throw ParameterError("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw ParameterError("burn_in must satisfy 0 <= burn_in < iterations");
    if (thin < 1) throw ParameterError("thin must be positive");
    if (f_thin < 1) throw ParameterError("f_thin must be positive");
    if (c_star < 1) throw ParameterError("c_star must be at least 1");
    if (!(slice_width > 0.0)) throw ParameterError("slice_width must be positive");
    if (init_clusters < 1) throw ParameterError("init_clusters must be at least 1");
    const auto lad = resolved_ladder(T);
    for (std::size_t k = 0; k < lad.size(); ++k) {
        if (lad[k] < 5 || lad[k] >= static_cast<int>(T))
            throw ParameterError("ladder entries must lie in [5, T)");
        if (k > 0 && lad[k] >= lad[k - 1]) throw ParameterError("ladder must be strictly decreasing");
    }
    auto check = [](const GammaPrior& g, const char* what) {
        if (!(g.shape > 0.0 && g.rate > 0.0)) throw ParameterError(std::string(what) + " prior needs positive shape and rate");
    };
    for (const auto& g : theta_prior) check(g, "theta");
    check(tau_prior, "tau_eps");
    check(alpha_prior, "alpha");
}

double GpDraws::acceptance_rate() const {
    long acc = 0;
    long att = 0;
    for (std::size_t k = 0; k < tempered_accepted.size(); ++k) {
        acc += tempered_accepted[k];
        att += tempered_attempted[k];
    }
    return att ? static_cast<double>(acc) / static_cast<double>(att) : 0.0;
}

double gp_marginal_loglik(std::span<const Eigen::VectorXd> ys, const RQParams& theta, double tau_eps,
                          std::span<const double> times) {
    const Cholesky factor = [&] {
        try {
            return Cholesky(add_nugget(rq_covariance(theta, times), tau_eps).values);
        } catch (const NumericError& e) {
            std::ostringstream os;
            os << e.what() << " for theta = (" << theta.theta1 << ", " << theta.theta2 << ", " << theta.theta3
               << "), tau_eps = " << tau_eps;
            throw NumericError(os.str());
        }
    }();
    double total = 0.0;
    for (const auto& y : ys) {
        if (y.size() != static_cast<Eigen::Index>(times.size())) throw ParameterError("series length does not match times");
        total += gaussian_logpdf(factor, y);
    }
    return total;
}

GaussianMoments predictive_moments(const Eigen::VectorXd& y, const RQParams& theta, double tau_eps,
                                   std::span<const double> times) {
    const auto C = rq_covariance(theta, times).values;
    const Cholesky K(add_nugget({C}, tau_eps).values);
    const Eigen::MatrixXd KinvC = K.solve(C);
    GaussianMoments out;
    out.mean = C * K.solve(y);
    out.cov = C - C * KinvC;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

Eigen::VectorXd conditional_f_draw(const Eigen::VectorXd& y, std::span<const Eigen::Index> observed_idx,
                                   const Eigen::MatrixXd& C, const Cholesky& prior_factor, double tau_eps, Rng& rng) {
    const auto T = C.rows();
    Eigen::VectorXd z(T);
    for (Eigen::Index j = 0; j < T; ++j) z(j) = rng.normal();
    Eigen::VectorXd f = prior_factor.lower() * z;
    const auto n = static_cast<Eigen::Index>(observed_idx.size());
    if (n == 0) return f;

    Eigen::MatrixXd K(n, n);
    Eigen::MatrixXd Cx(T, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        Cx.col(a) = C.col(observed_idx[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < n; ++b)
            K(a, b) = C(observed_idx[static_cast<std::size_t>(a)], observed_idx[static_cast<std::size_t>(b)]);
    }
    K.diagonal().array() += 1.0 / tau_eps;
    const Cholesky Kf(K);
    const double noise_sd = 1.0 / std::sqrt(tau_eps);
    Eigen::VectorXd r(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto j = observed_idx[static_cast<std::size_t>(a)];
        r(a) = y(j) - f(j) - noise_sd * rng.normal();
    }
    f += Cx * Kf.solve(r);
    return f;
}

Eigen::VectorXd predictive_f_draw(const Eigen::VectorXd& y, const RQParams& theta, double tau_eps,
                                  std::span<const double> times, Rng& rng) {
    auto C = rq_covariance(theta, times);
    auto jittered = C;
    add_to_diagonal(jittered, default_jitter(theta));
    const Cholesky prior(jittered.values);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(y.size()));
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<Eigen::Index>(j);
    return conditional_f_draw(y, all, C.values, prior, tau_eps, rng);
}

// ---------------------------------------------------------------------------

GpSampler::GpSampler(const Panel& panel, GpChainConfig cfg)
    : panel_(panel),
      cfg_(std::move(cfg)),
      times_(unit_spaced(panel.times())),
      N_(panel.num_series()),
      T_(panel.num_times()),
      rng_(cfg_.seed) {
    cfg_.validate(T_);
    ladder_ = cfg_.resolved_ladder(T_);
    regime_ = cfg_.regime;
    if (regime_ == GpRegime::Auto) regime_ = panel_.fully_observed() ? GpRegime::Marginalized : GpRegime::CoSampled;

    for (std::size_t i = 0; i < N_; ++i) observed_.push_back(panel_.observed_indices(i));

    std::vector<Eigen::Index> all(T_);
    for (std::size_t j = 0; j < T_; ++j) all[j] = static_cast<Eigen::Index>(j);
    level_sets_.push_back(all);
    for (int k : ladder_) level_sets_.push_back(even_subset(static_cast<Eigen::Index>(T_), k));

    for (const auto& set : level_sets_) {
        std::vector<Pattern> pats;
        std::vector<std::size_t> of(N_, 0);
        std::map<std::vector<Eigen::Index>, std::size_t> seen;
        for (std::size_t i = 0; i < N_; ++i) {
            std::vector<Eigen::Index> idx;
            if (regime_ == GpRegime::CoSampled) {
                idx = set;
            } else {
                std::set_intersection(set.begin(), set.end(), observed_[i].begin(), observed_[i].end(),
                                      std::back_inserter(idx));
            }
            auto [it, inserted] = seen.emplace(idx, pats.size());
            if (inserted) {
                Pattern p;
                for (auto j : idx) p.times.push_back(times_[static_cast<std::size_t>(j)]);
                p.idx = std::move(idx);
                pats.push_back(std::move(p));
            }
            of[i] = it->second;
        }
        patterns_.push_back(std::move(pats));
        pattern_of_.push_back(std::move(of));
    }

    const double v = mean_series_variance(panel_);
    RQParams init{1.0 / v, 1.0, 1.0};
    tau_ = 2.0 / v;
    const std::size_t K = cfg_.clustering ? std::min<std::size_t>(static_cast<std::size_t>(cfg_.init_clusters), N_) : 1;
    state_.alpha = cfg_.clustering ? 1.0 : 0.0;
    state_.locations.assign(K, init);
    state_.counts.assign(K, 0);
    state_.s.resize(N_);
    for (std::size_t i = 0; i < N_; ++i) {
        state_.s[i] = static_cast<int>(i % K);
        ++state_.counts[i % K];
    }

    f_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N_), static_cast<Eigen::Index>(T_));
    for (std::size_t i = 0; i < N_; ++i)
        for (auto j : observed_[i]) f_(static_cast<Eigen::Index>(i), j) = panel_.values()(static_cast<Eigen::Index>(i), j);
}

void GpSampler::set_state(ClusterState<RQParams> st) {
    if (st.s.size() != N_) throw ParameterError("state size does not match panel");
    st.check_invariants();
    state_ = std::move(st);
}

double GpSampler::noise_variance(const RQParams& theta, double tau) const {
    return regime_ == GpRegime::Marginalized ? 1.0 / tau : default_jitter(theta);
}

std::optional<Cholesky> GpSampler::factor_for(const RQParams& theta, double noise_var, std::size_t level,
                                              std::size_t pattern) const {
    const auto& pat = patterns_[level][pattern];
    if (pat.idx.empty()) return std::nullopt;
    try {
        auto c = rq_covariance(theta, pat.times);
        add_to_diagonal(c, noise_var);
        return Cholesky(c.values);
    } catch (const NumericError&) {
        return std::nullopt;
    } catch (const ParameterError&) {
        return std::nullopt;
    }
}

double GpSampler::series_loglik(std::size_t i, std::size_t level, const Cholesky& factor) const {
    const auto& pat = patterns_[level][pattern_of_[level][i]];
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::VectorXd v(static_cast<Eigen::Index>(pat.idx.size()));
    if (regime_ == GpRegime::Marginalized) {
        for (std::size_t k = 0; k < pat.idx.size(); ++k) v(static_cast<Eigen::Index>(k)) = panel_.values()(row, pat.idx[k]);
    } else {
        for (std::size_t k = 0; k < pat.idx.size(); ++k) v(static_cast<Eigen::Index>(k)) = f_(row, pat.idx[k]);
    }
    return gaussian_logpdf(factor, v);
}

double GpSampler::cluster_loglik(std::span<const std::size_t> members, const RQParams& theta, std::size_t level) const {
    const double nv = noise_variance(theta, tau_);
    std::map<std::size_t, std::optional<Cholesky>> cache;
    double total = 0.0;
    for (std::size_t i : members) {
        const std::size_t p = pattern_of_[level][i];
        if (patterns_[level][p].idx.empty()) continue;
        auto it = cache.find(p);
        if (it == cache.end()) it = cache.emplace(p, factor_for(theta, nv, level, p)).first;
        if (!it->second) return kNegInf;
        total += series_loglik(i, level, *it->second);
    }
    return total;
}

double GpSampler::total_loglik(double tau, std::size_t level) const {
    const auto mem = members();
    double total = 0.0;
    for (std::size_t m = 0; m < mem.size(); ++m) {
        const auto& theta = state_.locations[m];
        const double nv = regime_ == GpRegime::Marginalized ? 1.0 / tau : default_jitter(theta);
        std::map<std::size_t, std::optional<Cholesky>> cache;
        for (std::size_t i : mem[m]) {
            const std::size_t p = pattern_of_[level][i];
            if (patterns_[level][p].idx.empty()) continue;
            auto it = cache.find(p);
            if (it == cache.end()) it = cache.emplace(p, factor_for(theta, nv, level, p)).first;
            if (!it->second) return kNegInf;
            total += series_loglik(i, level, *it->second);
        }
    }
    return total;
}

std::vector<std::vector<std::size_t>> GpSampler::members() const {
    std::vector<std::vector<std::size_t>> out(state_.locations.size());
    for (std::size_t i = 0; i < N_; ++i) out[static_cast<std::size_t>(state_.s[i])].push_back(i);
    return out;
}

RQParams GpSampler::draw_base(Rng& rng) const {
    RQParams th;
    for (std::size_t p = 0; p < 3; ++p) th[p] = rng.gamma(cfg_.theta_prior[p].shape, cfg_.theta_prior[p].rate);
    return th;
}

void GpSampler::update_locations_and_tau() {
    const auto mem = members();
    const std::size_t levels = level_sets_.size();
    for (std::size_t m = 0; m < state_.locations.size(); ++m) {
        for (std::size_t p = 0; p < 3; ++p) {
            const GammaPrior prior = cfg_.theta_prior[p];
            auto density = [this, &mem, m, p, prior](std::size_t level) {
                return LogDensity([this, &mem, m, p, prior, level](double x) {
                    if (std::abs(x) > kMaxLogScale) return kNegInf;
                    RQParams th = state_.locations[m];
                    th[p] = std::exp(x);
                    const double ll = cluster_loglik(mem[m], th, level);
                    // gamma prior on the natural scale plus the log-scale Jacobian
                    return ll + prior.shape * x - prior.rate * th[p];
                });
            };
            const LogDensity exact = density(0);
            std::vector<LogDensity> ladder;
            for (std::size_t l = 1; l < levels; ++l) ladder.push_back(density(l));
            try {
                const auto r = tempered_update_scalar(std::log(state_.locations[m][p]), exact, ladder, cfg_.slice_width, rng_);
                ++attempted_;
                if (r.accepted) ++accepted_;
                state_.locations[m][p] = std::exp(r.value);
            } catch (const NumericError& e) {
                std::ostringstream os;
                os << "location update (parameter " << p + 1 << ", cluster " << m + 1 << "): " << e.what();
                throw NumericError(os.str());
            }
        }
    }

    if (regime_ != GpRegime::Marginalized) return;
    const GammaPrior prior = cfg_.tau_prior;
    auto density = [this, prior](std::size_t level) {
        return LogDensity([this, prior, level](double x) {
            if (std::abs(x) > kMaxLogScale) return kNegInf;
            const double tau = std::exp(x);
            return total_loglik(tau, level) + prior.shape * x - prior.rate * tau;
        });
    };
    const LogDensity exact = density(0);
    std::vector<LogDensity> ladder;
    for (std::size_t l = 1; l < levels; ++l) ladder.push_back(density(l));
    try {
        const auto r = tempered_update_scalar(std::log(tau_), exact, ladder, cfg_.slice_width, rng_);
        ++attempted_;
        if (r.accepted) ++accepted_;
        tau_ = std::exp(r.value);
    } catch (const NumericError& e) {
        throw NumericError(std::string("noise precision update: ") + e.what());
    }
}

void GpSampler::assignment_sweep() {
    if (!cfg_.clustering) return;
    struct Lazy {
        RQParams theta;
        std::vector<std::optional<Cholesky>> factor;
        std::vector<char> tried;
    };
    const std::size_t npat = patterns_[0].size();
    auto make_lazy = [npat](const RQParams& th) { return Lazy{th, std::vector<std::optional<Cholesky>>(npat), std::vector<char>(npat, 0)}; };
    auto loglik = [this](Lazy& lz, std::size_t i) {
        const std::size_t p = pattern_of_[0][i];
        if (patterns_[0][p].idx.empty()) return 0.0;
        if (!lz.tried[p]) {
            lz.factor[p] = factor_for(lz.theta, noise_variance(lz.theta, tau_), 0, p);
            lz.tried[p] = 1;
        }
        return lz.factor[p] ? series_loglik(i, 0, *lz.factor[p]) : kNegInf;
    };

    std::vector<Lazy> clusters;
    for (const auto& th : state_.locations) clusters.push_back(make_lazy(th));
    std::vector<Lazy> aux(static_cast<std::size_t>(cfg_.c_star), make_lazy(RQParams{}));

    algorithm8_sweep(
        state_, cfg_.c_star, [this](Rng& r) { return draw_base(r); },
        [&](std::size_t i, std::size_t m) { return loglik(clusters[m], i); },
        [&](std::size_t i, std::size_t a, const RQParams& loc) {
            aux[a] = make_lazy(loc);
            return loglik(aux[a], i);
        },
        [&](std::size_t slot, std::size_t a) {
            if (slot != clusters.size()) throw std::logic_error("unexpected cluster slot");
            clusters.push_back(std::move(aux[a]));
            aux[a] = make_lazy(RQParams{});
        },
        rng_);
#ifndef NDEBUG
    state_.check_invariants();
#endif
}

void GpSampler::update_alpha() {
    if (!cfg_.clustering) {
        state_.alpha = 0.0;
        return;
    }
    state_.alpha = resample_alpha(state_.alpha, state_.num_clusters(), N_, cfg_.alpha_prior, rng_);
}

void GpSampler::draw_f_all() {
    const auto mem = members();
    for (std::size_t m = 0; m < mem.size(); ++m) {
        const auto& theta = state_.locations[m];
        const auto C = rq_covariance(theta, times_);
        auto jittered = C;
        add_to_diagonal(jittered, default_jitter(theta));
        const Cholesky prior = [&] {
            try {
                return Cholesky(jittered.values);
            } catch (const NumericError&) {
                // RQ matrices with very long length scales need more than the default jitter.
                add_to_diagonal(jittered, 1e-6 / theta.theta1);
                return Cholesky(jittered.values);
            }
        }();
        for (std::size_t i : mem[m]) {
            const auto row = static_cast<Eigen::Index>(i);
            const Eigen::VectorXd y = panel_.values().row(row).transpose();
            f_.row(row) = conditional_f_draw(y, observed_[i], C.values, prior, tau_, rng_).transpose();
        }
    }
}

void GpSampler::update_f() {
    draw_f_all();
    if (regime_ == GpRegime::CoSampled) tau_ = draw_noise_precision(panel_, f_, cfg_.tau_prior, rng_);
}

void GpSampler::iterate() {
    update_locations_and_tau();
    assignment_sweep();
    update_alpha();
    update_f();
}

GpDraws GpSampler::run() {
    GpDraws d;
    d.num_series = N_;
    d.num_times = T_;
    d.regime = regime_;
    d.ladder = ladder_;
    if (regime_ == GpRegime::CoSampled) draw_f_all();

    for (int it = 1; it <= cfg_.iterations; ++it) {
        const int acc0 = accepted_;
        const int att0 = attempted_;
        const bool keep = it > cfg_.burn_in && (it - cfg_.burn_in - 1) % cfg_.thin == 0;
        const bool keep_f = keep && cfg_.store_f && d.iteration.size() % static_cast<std::size_t>(cfg_.f_thin) == 0;
        try {
            update_locations_and_tau();
            assignment_sweep();
            update_alpha();
            if (regime_ == GpRegime::CoSampled) update_f();
            else if (keep_f) draw_f_all();
        } catch (const NumericError& e) {
            throw NumericError("GP chain iteration " + std::to_string(it) + ": " + e.what());
        }
        d.clusters_trace.push_back(static_cast<int>(state_.num_clusters()));
        d.tempered_accepted.push_back(accepted_ - acc0);
        d.tempered_attempted.push_back(attempted_ - att0);
        if (!keep) continue;
        d.iteration.push_back(it);
        d.s.push_back(state_.s);
        d.locations.push_back(state_.locations);
        d.alpha.push_back(state_.alpha);
        d.tau_eps.push_back(tau_);
        if (keep_f) {
            d.f.push_back(f_);
            d.f_iteration.push_back(it);
        }
    }
    return d;
}

GpDraws run_gp_chain(const Panel& panel, const GpChainConfig& cfg) {
    GpSampler sampler(panel, cfg);
    return sampler.run();
}

}  // namespace growfn
