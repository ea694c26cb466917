#pragma once

#include "growfn/dp_core.hpp"
#include "growfn/panel.hpp"
#include "growfn/rng.hpp"

#include <Eigen/Dense>

namespace growfn {

/// Gamma conditional of the noise precision given latent functions.
///
/// shape = prior.shape + observed/2, rate = prior.rate + 0.5 * sum over
/// observed cells of (y - f)^2. Held-out and missing cells never contribute.
struct NoiseConditional {
    double shape;
    double rate;
};

NoiseConditional noise_conditional(const Panel& panel, const Eigen::MatrixXd& f, const GammaPrior& prior);

inline double draw_noise_precision(const Panel& panel, const Eigen::MatrixXd& f, const GammaPrior& prior, Rng& rng) {
    const auto c = noise_conditional(panel, f, prior);
    return rng.gamma(c.shape, c.rate);
}

}  // namespace growfn
