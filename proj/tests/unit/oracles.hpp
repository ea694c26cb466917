#pragma once

// Test-side reference computations shared by the unit and acceptance suites.

#include "growfn/dp_core.hpp"
#include "growfn/igmrf_sampler.hpp"
#include "growfn/kernels.hpp"
#include "growfn/rng.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <vector>

namespace oracle {

inline double log_sum_exp(const std::vector<double>& v) {
    double m = -INFINITY;
    for (double x : v) m = std::max(m, x);
    double s = 0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// log of the Chinese-restaurant prior of a partition (first-appearance labels).
inline double log_crp(const std::vector<int>& s, double alpha) {
    std::map<int, int> n;
    for (int v : s) ++n[v];
    double out = static_cast<double>(n.size()) * std::log(alpha) + std::lgamma(alpha) - std::lgamma(alpha + static_cast<double>(s.size()));
    for (const auto& [k, c] : n) out += std::lgamma(static_cast<double>(c));
    return out;
}

inline double total_variation(const std::map<std::vector<int>, double>& p, const std::map<std::vector<int>, double>& q) {
    double tv = 0;
    for (const auto& [k, v] : p) tv += std::abs(v - (q.count(k) ? q.at(k) : 0.0));
    for (const auto& [k, v] : q)
        if (!p.count(k)) tv += std::abs(v);
    return 0.5 * tv;
}

// ---- normal-normal toy for the auxiliary-location sweep ---------------------

struct NormalToy {
    std::vector<double> x{-1.3, -0.8, 0.9, 1.7};
    double sigma = 0.6;   // observation sd
    double prior_sd = 1.2;  // base measure N(0, prior_sd^2)
    double alpha = 1.0;

    double log_marginal(const std::vector<double>& xs) const {
        const double n = static_cast<double>(xs.size());
        double sum = 0, ss = 0;
        for (double v : xs) {
            sum += v;
            ss += v * v;
        }
        const double s2 = sigma * sigma, t2 = prior_sd * prior_sd;
        const double logdet = n * std::log(s2) + std::log1p(n * t2 / s2);
        const double quad = (ss - t2 * sum * sum / (s2 + n * t2)) / s2;
        return -0.5 * (n * std::log(2 * M_PI) + logdet + quad);
    }

    std::map<std::vector<int>, double> exact() const {
        std::map<std::vector<int>, double> out;
        std::vector<std::vector<int>> parts = testutil::all_partitions(static_cast<int>(x.size()));
        std::vector<double> lp;
        for (const auto& s : parts) {
            std::map<int, std::vector<double>> groups;
            for (std::size_t i = 0; i < s.size(); ++i) groups[s[i]].push_back(x[i]);
            double l = log_crp(s, alpha);
            for (const auto& [k, g] : groups) l += log_marginal(g);
            lp.push_back(l);
        }
        const double z = log_sum_exp(lp);
        for (std::size_t k = 0; k < parts.size(); ++k) out[parts[k]] = std::exp(lp[k] - z);
        return out;
    }

    /// Empirical partition frequencies from auxiliary-location sweeps plus conjugate location refreshes.
    std::map<std::vector<int>, double> algorithm8(long sweeps, std::uint64_t seed, int c_star = 3) const {
        growfn::Rng rng(seed);
        auto st = growfn::ClusterState<double>::single(x.size(), 0.0, alpha);
        const double s2 = sigma * sigma;
        auto ll = [&](std::size_t i, double mu) { return -0.5 * std::log(2 * M_PI * s2) - 0.5 * (x[i] - mu) * (x[i] - mu) / s2; };
        std::map<std::vector<int>, double> freq;
        for (long it = 0; it < sweeps; ++it) {
            growfn::algorithm8_sweep(
                st, c_star, [&](growfn::Rng& r) { return r.normal(0.0, prior_sd); },
                [&](std::size_t i, std::size_t m) { return ll(i, st.locations[m]); },
                [&](std::size_t i, std::size_t, double mu) { return ll(i, mu); }, [](std::size_t, std::size_t) {}, rng);
            std::vector<double> sum(st.num_clusters(), 0.0);
            for (std::size_t i = 0; i < x.size(); ++i) sum[static_cast<std::size_t>(st.s[i])] += x[i];
            for (std::size_t m = 0; m < st.num_clusters(); ++m) {
                const double prec = 1.0 / (prior_sd * prior_sd) + st.counts[m] / s2;
                st.locations[m] = rng.normal(sum[m] / s2 / prec, 1.0 / std::sqrt(prec));
            }
            freq[testutil::canonical(st.s)] += 1.0;
        }
        for (auto& [k, v] : freq) v /= static_cast<double>(sweeps);
        return freq;
    }
};

// ---- iGMRF toy for the conjugate sweep ---------------------------------------

struct IgmrfToy {
    Eigen::MatrixXd f;
    growfn::GammaPrior prior{1.0, 0.1};
    double alpha = 1.0;

    IgmrfToy() : f(4, 8) {
        // Two rough and two smooth series with different second-difference energy.
        f << 0.0, 1.1, -0.4, 1.5, 0.2, 1.8, -0.3, 1.0,
             0.3, -0.8, 1.0, -0.6, 1.2, 0.1, -0.2, 0.9,
             0.0, 0.2, 0.5, 0.7, 0.8, 1.1, 1.3, 1.2,
             1.0, 0.9, 0.95, 0.7, 0.6, 0.55, 0.3, 0.35;
    }

    std::map<std::vector<int>, double> exact() const {
        const auto s = growfn::rw2_structure(8);
        const growfn::Rw2Stencil st(s);
        std::vector<double> q(4);
        for (int i = 0; i < 4; ++i) q[static_cast<std::size_t>(i)] = st.quad_form(f.row(i));
        const double T = 8;
        auto cluster_marginal = [&](const std::vector<int>& members) {
            const double n = static_cast<double>(members.size());
            double qs = 0;
            for (int i : members) qs += q[static_cast<std::size_t>(i)];
            const double a2 = prior.shape + 0.5 * n * (T - 2);
            return n * st.log_const() + prior.shape * std::log(prior.rate) - std::lgamma(prior.shape) + std::lgamma(a2) -
                   a2 * std::log(prior.rate + 0.5 * qs);
        };
        std::map<std::vector<int>, double> out;
        auto parts = testutil::all_partitions(4);
        std::vector<double> lp;
        for (const auto& p : parts) {
            std::map<int, std::vector<int>> groups;
            for (int i = 0; i < 4; ++i) groups[p[static_cast<std::size_t>(i)]].push_back(i);
            double l = log_crp(p, alpha);
            for (const auto& [k, g] : groups) l += cluster_marginal(g);
            lp.push_back(l);
        }
        const double z = log_sum_exp(lp);
        for (std::size_t k = 0; k < parts.size(); ++k) out[parts[k]] = std::exp(lp[k] - z);
        return out;
    }

    std::map<std::vector<int>, double> sampled(long sweeps, std::uint64_t seed) const {
        const auto s = growfn::rw2_structure(8);
        const growfn::Rw2Stencil sten(s);
        growfn::Rng rng(seed);
        auto st = growfn::ClusterState<double>::single(4, 1.0, alpha);
        std::map<std::vector<int>, double> freq;
        for (long it = 0; it < sweeps; ++it) {
            growfn::igmrf_assignment_sweep(st, f, sten, prior, rng);
            st.locations = growfn::gibbs_kappa_update(f, st, sten, prior, rng);
            freq[testutil::canonical(st.s)] += 1.0;
        }
        for (auto& [k, v] : freq) v /= static_cast<double>(sweeps);
        return freq;
    }
};

// ---- Escobar-West -------------------------------------------------------------

/// Mean and second moment of p(alpha | M, N) proportional to
/// Ga(alpha | a, b) alpha^M Gamma(alpha) / Gamma(alpha + N), by quadrature on a log grid.
inline std::pair<double, double> alpha_posterior_moments(std::size_t M, std::size_t N, growfn::GammaPrior prior) {
    const int K = 400000;
    const double lo = std::log(1e-8), hi = std::log(1e3);
    const double h = (hi - lo) / K;
    std::vector<double> lw(K + 1);
    for (int k = 0; k <= K; ++k) {
        const double u = lo + k * h;
        const double a = std::exp(u);
        // density in u = log alpha carries the Jacobian alpha.
        lw[static_cast<std::size_t>(k)] = (prior.shape - 1) * u - prior.rate * a + static_cast<double>(M) * u + std::lgamma(a) -
                                          std::lgamma(a + static_cast<double>(N)) + u;
    }
    const double mx = *std::max_element(lw.begin(), lw.end());
    double z = 0, m1 = 0, m2 = 0;
    for (int k = 0; k <= K; ++k) {
        const double w = std::exp(lw[static_cast<std::size_t>(k)] - mx) * ((k == 0 || k == K) ? 0.5 : 1.0);
        const double a = std::exp(lo + k * h);
        z += w;
        m1 += w * a;
        m2 += w * a * a;
    }
    return {m1 / z, m2 / z};
}

/// Direct evaluation of the two-component mixture weight.
inline double escobar_west_weight(double eta, double M, double N, double a, double b) {
    const double odds = (a + M - 1.0) / (N * (b - std::log(eta)));
    return odds / (1.0 + odds);
}

// ---- Gaussian conditionals ---------------------------------------------------

/// (tau I + P)^{-1} tau y for a precision P.
inline Eigen::VectorXd smooth_with_precision(const Eigen::MatrixXd& P, const Eigen::VectorXd& y, double tau) {
    const Eigen::MatrixXd A = tau * Eigen::MatrixXd::Identity(y.size(), y.size()) + P;
    return A.fullPivLu().solve(tau * y);
}

}  // namespace oracle
