#include "growfn/synthgen.hpp"

#include "growfn/error.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace growfn {

namespace {

enum Stream : std::uint64_t { kAllocation = 0, kFunction = 1, kNoise = 2 };

std::vector<int> allocate(std::size_t N, std::size_t M, Rng& rng) {
    std::vector<int> s(N);
    while (true) {
        std::vector<int> counts(M, 0);
        for (auto& label : s) {
            label = static_cast<int>(rng.index(M));
            ++counts[static_cast<std::size_t>(label)];
        }
        bool all = true;
        for (int c : counts) all = all && c > 0;
        if (all) return s;
    }
}

double mean_sample_variance(const Eigen::MatrixXd& f) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double mean = f.row(i).mean();
        total += (f.row(i).array() - mean).square().sum() / static_cast<double>(f.cols() - 1);
    }
    return total / static_cast<double>(f.rows());
}

SyntheticData finish(const SynthConfig& cfg, Eigen::MatrixXd f, std::vector<int> s, Eigen::MatrixXd locations) {
    const double v = mean_sample_variance(f);
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("generated functions have no variance");
    const double tau = 1.0 / (cfg.noise_to_signal * v);
    const double sd = 1.0 / std::sqrt(tau);
    Eigen::MatrixXd y = f;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        Rng rng = Rng::substream(cfg.seed, kNoise, static_cast<std::uint64_t>(i));
        for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += sd * rng.normal();
    }
    std::vector<double> times(cfg.T);
    std::iota(times.begin(), times.end(), 1.0);
    std::vector<std::string> ids;
    char buf[32];
    for (std::size_t i = 0; i < cfg.N; ++i) {
        std::snprintf(buf, sizeof buf, "d%03zu", i + 1);
        ids.emplace_back(buf);
    }
    Panel panel(y, BoolMatrix::Constant(y.rows(), y.cols(), true), std::move(times), std::move(ids));
    return {std::move(panel), std::move(f), std::move(s), std::move(locations), tau};
}

}  // namespace

std::string to_string(Generator g) { return g == Generator::TwoTermSE ? "two-term-se" : "proper-gmrf"; }

Generator generator_from_string(const std::string& s) {
    if (s == "two-term-se") return Generator::TwoTermSE;
    if (s == "proper-gmrf") return Generator::ProperGmrf;
    throw ParameterError("unknown generator '" + s + "' (expected two-term-se or proper-gmrf)");
}

Eigen::Matrix<double, 4, Eigen::Dynamic> default_two_term_locations() {
    Eigen::Matrix<double, 4, Eigen::Dynamic> m(4, 3);
    m << 2.61, 0.38, 0.91,
         3.00, 3.53, 1.56,
         1.04, 2.26, 0.84,
         0.22, 0.15, 0.71;
    return m;
}

void SynthConfig::validate() const {
    if (N < 1 || M < 1 || M > N) throw ParameterError("need 1 <= M <= N");
    if (T < 5) throw ParameterError("need T >= 5");
    if (!(noise_to_signal > 0.0)) throw ParameterError("noise_to_signal must be positive");
    if (!(rho > -1.0 && rho < 1.0)) throw ParameterError("rho must lie in (-1, 1)");
    if (se_locations && (se_locations->rows() != 4 || static_cast<std::size_t>(se_locations->cols()) != M))
        throw ParameterError("two-term SE locations must be 4 x M");
    if (se_locations && !(se_locations->array() > 0.0).all())
        throw ParameterError("two-term SE locations must be positive");
    if (kappas && kappas->size() != M) throw ParameterError("need one kappa per cluster");
    if (kappas)
        for (double k : *kappas)
            if (!(k > 0.0)) throw ParameterError("kappas must be positive");
}

SyntheticData gen_two_term_se(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::substream(cfg.seed, kAllocation, 0);
    auto s = allocate(cfg.N, cfg.M, rng);

    Eigen::MatrixXd loc;
    if (cfg.se_locations) {
        loc = *cfg.se_locations;
    } else if (cfg.M == 3 && !cfg.se_from_hyperpriors) {
        loc = default_two_term_locations();
    } else {
        loc.resize(4, static_cast<Eigen::Index>(cfg.M));
        for (Eigen::Index m = 0; m < loc.cols(); ++m) {
            loc(0, m) = rng.gamma(3.0, 3.0);
            loc(1, m) = rng.gamma(3.0, 2.0);
            loc(2, m) = rng.gamma(3.0, 3.0);
            loc(3, m) = rng.gamma(2.0, 5.0);
        }
    }

    std::vector<double> times(cfg.T);
    std::iota(times.begin(), times.end(), 1.0);
    std::vector<Eigen::MatrixXd> factors;
    for (Eigen::Index m = 0; m < loc.cols(); ++m) {
        auto c = se_covariance({loc(0, m), loc(1, m)}, times);
        c.values += se_covariance({loc(2, m), loc(3, m)}, times).values;
        add_to_diagonal(c, 1e-8 * c.values(0, 0));
        factors.push_back(Cholesky(c.values).lower());
    }

    Eigen::MatrixXd f(static_cast<Eigen::Index>(cfg.N), static_cast<Eigen::Index>(cfg.T));
    for (std::size_t i = 0; i < cfg.N; ++i) {
        Rng r = Rng::substream(cfg.seed, kFunction, i);
        Eigen::VectorXd z(static_cast<Eigen::Index>(cfg.T));
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = r.normal();
        f.row(static_cast<Eigen::Index>(i)) = (factors[static_cast<std::size_t>(s[i])] * z).transpose();
    }
    return finish(cfg, std::move(f), std::move(s), std::move(loc));
}

SyntheticData gen_proper_gmrf(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::substream(cfg.seed, kAllocation, 0);
    auto s = allocate(cfg.N, cfg.M, rng);
    std::vector<double> kappas;
    if (cfg.kappas) kappas = *cfg.kappas;
    else
        for (std::size_t m = 0; m < cfg.M; ++m) kappas.push_back(rng.gamma(1.0, 1.0));

    const auto structure = rw2_structure(static_cast<int>(cfg.T));
    // f ~ N(0, R^{-1}) with R = L L': f = L^{-T} z.
    std::vector<Eigen::MatrixXd> factors;
    for (double k : kappas) factors.push_back(Cholesky(proper_gmrf_precision(structure, k, cfg.rho)).lower());

    Eigen::MatrixXd f(static_cast<Eigen::Index>(cfg.N), static_cast<Eigen::Index>(cfg.T));
    for (std::size_t i = 0; i < cfg.N; ++i) {
        Rng r = Rng::substream(cfg.seed, kFunction, i);
        Eigen::VectorXd z(static_cast<Eigen::Index>(cfg.T));
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = r.normal();
        const auto& L = factors[static_cast<std::size_t>(s[i])];
        f.row(static_cast<Eigen::Index>(i)) = L.transpose().triangularView<Eigen::Upper>().solve(z).transpose();
    }
    Eigen::MatrixXd loc(1, static_cast<Eigen::Index>(cfg.M));
    for (std::size_t m = 0; m < cfg.M; ++m) loc(0, static_cast<Eigen::Index>(m)) = kappas[m];
    return finish(cfg, std::move(f), std::move(s), std::move(loc));
}

SyntheticData generate(const SynthConfig& cfg) {
    return cfg.generator == Generator::TwoTermSE ? gen_two_term_se(cfg) : gen_proper_gmrf(cfg);
}

BoolMatrix misclustering_truth_table(const std::vector<int>& s) {
    const auto n = static_cast<Eigen::Index>(s.size());
    BoolMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)];
    return out;
}

}  // namespace growfn
