#include "growfn/noise.hpp"

namespace growfn {

NoiseConditional noise_conditional(const Panel& panel, const Eigen::MatrixXd& f, const GammaPrior& prior) {
    const auto& y = panel.values();
    const auto& mask = panel.mask();
    double ss = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index j = 0; j < y.cols(); ++j)
            if (mask(i, j)) {
                const double r = y(i, j) - f(i, j);
                ss += r * r;
            }
    return {prior.shape + 0.5 * static_cast<double>(panel.observed_count()), prior.rate + 0.5 * ss};
}

}  // namespace growfn
