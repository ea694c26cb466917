#include "growfn/dp_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace growfn {

std::vector<double> urn_weights(std::span<const int> counts_minus_i, double alpha, int c_star,
                                std::span<const double> loglik) {
    const std::size_t M = counts_minus_i.size();
    if (c_star < 1) throw ParameterError("c_star must be at least 1");
    if (loglik.size() != M + static_cast<std::size_t>(c_star))
        throw ParameterError("urn_weights: expected one log-likelihood per existing cluster and auxiliary");
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> lw(loglik.size(), kNegInf);
    for (std::size_t m = 0; m < M; ++m)
        if (counts_minus_i[m] > 0) lw[m] = std::log(static_cast<double>(counts_minus_i[m])) + loglik[m];
    if (alpha > 0.0) {
        const double la = std::log(alpha / static_cast<double>(c_star));
        for (std::size_t a = 0; a < static_cast<std::size_t>(c_star); ++a) lw[M + a] = la + loglik[M + a];
    }
    double top = kNegInf;
    for (double v : lw)
        if (!std::isnan(v)) top = std::max(top, v);
    if (top == kNegInf || std::isinf(top)) throw DegenerateLikelihoodError("every assignment weight is zero or non-finite");
    double total = 0.0;
    for (double& v : lw) {
        v = std::isnan(v) ? 0.0 : std::exp(v - top);
        total += v;
    }
    for (double& v : lw) v /= total;
    return lw;
}

std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        acc += probs[k];
        last_positive = k;
        if (u < acc) return k;
    }
    return last_positive;
}

AlphaMixture escobar_west_mixture(double eta, std::size_t M, std::size_t N, const GammaPrior& prior) {
    const double m = static_cast<double>(M);
    const double n = static_cast<double>(N);
    const double rate = prior.rate - std::log(eta);
    const double odds = (prior.shape + m - 1.0) / (n * rate);
    return {odds / (1.0 + odds), prior.shape + m, prior.shape + m - 1.0, rate};
}

double resample_alpha(double alpha, std::size_t M, std::size_t N, const GammaPrior& prior, Rng& rng) {
    if (M < 1 || N < 1) throw ParameterError("resample_alpha needs M >= 1 and N >= 1");
    const double eta = rng.beta(alpha + 1.0, static_cast<double>(N));
    const auto mix = escobar_west_mixture(eta, M, N, prior);
    const bool high = rng.uniform() < mix.weight_high;
    // shape_low is zero only when shape + M - 1 == 0, impossible for shape > 0.
    return rng.gamma(high ? mix.shape_high : mix.shape_low, mix.rate);
}

}  // namespace growfn
