#include "growfn/summary.hpp"

#include "growfn/error.hpp"

#include <algorithm>
#include <cmath>

namespace growfn {

Eigen::MatrixXd pairwise_probability(std::span<const Partition> draws) {
    if (draws.empty()) throw ParameterError("pairwise probabilities need at least one draw");
    const auto n = static_cast<Eigen::Index>(draws.front().size());
    Eigen::MatrixXd pw = Eigen::MatrixXd::Zero(n, n);
    for (const auto& s : draws) {
        if (static_cast<Eigen::Index>(s.size()) != n) throw ParameterError("draws disagree on the number of series");
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j)
                if (s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)]) pw(i, j) += 1.0;
    }
    pw /= static_cast<double>(draws.size());
    pw.triangularView<Eigen::StrictlyLower>() = pw.transpose();
    return pw;
}

double dahl_loss(const Partition& s, const Eigen::MatrixXd& pw) {
    const auto n = static_cast<Eigen::Index>(s.size());
    if (pw.rows() != n || pw.cols() != n) throw ParameterError("partition and pairwise matrix sizes differ");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a = s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
            loss += (a - pw(i, j)) * (a - pw(i, j));
        }
    return loss;
}

SelectedPartition dahl_select(std::span<const Partition> draws, const Eigen::MatrixXd& pw, std::span<const int> iterations) {
    if (draws.empty()) throw ParameterError("partition selection needs at least one draw");
    if (!iterations.empty() && iterations.size() != draws.size())
        throw ParameterError("one iteration number per draw is required");
    SelectedPartition best;
    bool first = true;
    for (std::size_t d = 0; d < draws.size(); ++d) {
        const double loss = dahl_loss(draws[d], pw);
        // Rounding noise between equal losses must not override the earliest draw.
        if (first || loss < best.loss - 1e-12 * std::max(1.0, best.loss)) {
            best = {draws[d], d, iterations.empty() ? static_cast<int>(d + 1) : iterations[d], loss};
            first = false;
        }
    }
    return best;
}

double misclustering_rate(const Partition& est, const Partition& truth) {
    if (est.size() != truth.size()) throw ParameterError("partitions have different lengths");
    const std::size_t n = est.size();
    if (n < 2) return 0.0;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && (est[i] == est[j]) != (truth[i] == truth[j])) ++bad;
    return static_cast<double>(bad) / static_cast<double>(n * (n - 1));
}

double normalized_mspe(const Eigen::MatrixXd& f_hat, const Eigen::MatrixXd& f_true, std::span<const Cell> cells) {
    if (cells.size() < 2) throw DegenerateVarianceError("normalized MSPE needs at least two test cells");
    if (f_hat.rows() != f_true.rows() || f_hat.cols() != f_true.cols())
        throw ParameterError("estimate and truth have different shapes");
    double mean = 0.0;
    for (const auto& c : cells) {
        if (c.series >= static_cast<std::size_t>(f_true.rows()) || c.time >= static_cast<std::size_t>(f_true.cols()))
            throw ParameterError("test cell outside the panel");
        mean += f_true(static_cast<Eigen::Index>(c.series), static_cast<Eigen::Index>(c.time));
    }
    mean /= static_cast<double>(cells.size());
    double sse = 0.0;
    double var = 0.0;
    for (const auto& c : cells) {
        const auto i = static_cast<Eigen::Index>(c.series);
        const auto j = static_cast<Eigen::Index>(c.time);
        sse += (f_hat(i, j) - f_true(i, j)) * (f_hat(i, j) - f_true(i, j));
        var += (f_true(i, j) - mean) * (f_true(i, j) - mean);
    }
    if (!(var > 0.0)) throw DegenerateVarianceError("true functions are constant over the test cells");
    return sse / var;
}

Eigen::MatrixXd posterior_mean(std::span<const Eigen::MatrixXd> draws) {
    if (draws.empty()) throw ParameterError("posterior mean needs at least one draw");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(draws.front().rows(), draws.front().cols());
    for (const auto& d : draws) m += d;
    return m / static_cast<double>(draws.size());
}

double normalized_mspe(std::span<const Eigen::MatrixXd> f_draws, const Eigen::MatrixXd& f_true,
                       std::span<const Cell> cells) {
    return normalized_mspe(posterior_mean(f_draws), f_true, cells);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ParameterError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CredibleBands credible_bands(std::span<const Eigen::MatrixXd> f_draws, double level,
                             const std::optional<std::vector<Standardization>>& standardization) {
    if (f_draws.size() < 20) throw ParameterError("credible bands need at least 20 draws");
    if (!(level >= 0.0 && level < 1.0)) throw ParameterError("level must lie in [0, 1)");
    const auto rows = f_draws.front().rows();
    const auto cols = f_draws.front().cols();
    if (standardization && static_cast<Eigen::Index>(standardization->size()) != rows)
        throw ParameterError("standardization metadata does not match the number of series");
    CredibleBands b{level, Eigen::MatrixXd(rows, cols), posterior_mean(f_draws), Eigen::MatrixXd(rows, cols)};
    std::vector<double> cell(f_draws.size());
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (std::size_t d = 0; d < f_draws.size(); ++d) cell[d] = f_draws[d](i, j);
            b.lower(i, j) = quantile(cell, 0.5 * (1.0 - level));
            b.upper(i, j) = quantile(cell, 0.5 * (1.0 + level));
        }
    if (standardization)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto& st = (*standardization)[static_cast<std::size_t>(i)];
            for (auto* m : {&b.lower, &b.mean, &b.upper}) m->row(i) = (m->row(i).array() * st.sd + st.mean).matrix();
        }
    return b;
}

double band_coverage(const CredibleBands& bands, const Eigen::MatrixXd& f_true, std::span<const Cell> cells) {
    if (cells.empty()) throw ParameterError("coverage needs at least one cell");
    std::size_t inside = 0;
    for (const auto& c : cells) {
        const auto i = static_cast<Eigen::Index>(c.series);
        const auto j = static_cast<Eigen::Index>(c.time);
        if (f_true(i, j) >= bands.lower(i, j) && f_true(i, j) <= bands.upper(i, j)) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(cells.size());
}

}  // namespace growfn
