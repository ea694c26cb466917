#include "growfn/error.hpp"
#include "growfn/synthgen.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <set>

using namespace growfn;

TEST_CASE("default configuration and location table") {
    const SynthConfig cfg;
    CHECK(cfg.N == 100);
    CHECK(cfg.T == 158);
    CHECK(cfg.M == 3);
    CHECK(cfg.noise_to_signal == 0.20);
    CHECK(cfg.rho == 0.95);
    const auto loc = default_two_term_locations();
    CHECK(loc(0, 0) == 2.61);
    CHECK(loc(1, 0) == 3.00);
    CHECK(loc(2, 0) == 1.04);
    CHECK(loc(3, 0) == 0.22);
    CHECK(loc.cols() == 3);
}

TEST_CASE("two-term SE bundle at full size") {
    SynthConfig cfg;
    cfg.seed = 5;
    const auto d = gen_two_term_se(cfg);
    CHECK(d.panel.num_series() == 100);
    CHECK(d.panel.num_times() == 158);
    CHECK(d.panel.fully_observed());
    CHECK(d.panel.series_ids().front() == "d001");
    CHECK(d.panel.times().front() == 1.0);
    CHECK(d.locations_true == Eigen::MatrixXd(default_two_term_locations()));
    CHECK(std::set<int>(d.s_true.begin(), d.s_true.end()) == std::set<int>{0, 1, 2});

    double v = 0;
    for (Eigen::Index i = 0; i < d.f_true.rows(); ++i) {
        const double m = d.f_true.row(i).mean();
        v += (d.f_true.row(i).array() - m).square().sum() / 157.0;
    }
    v /= 100.0;
    CHECK(d.tau_eps_true == doctest::Approx(1.0 / (0.2 * v)).epsilon(1e-12));

    const Eigen::MatrixXd r = d.panel.values() - d.f_true;
    const double rv = r.array().square().mean();
    CHECK(rv == doctest::Approx(1.0 / d.tau_eps_true).epsilon(0.05));
}

TEST_CASE("two-term SE marginal variance per cluster") {
    // Each cluster's summed covariance has diagonal 1/theta_11 + 1/theta_21.
    SynthConfig cfg;
    cfg.N = 600;
    cfg.T = 8;
    cfg.seed = 3;
    const auto d = gen_two_term_se(cfg);
    const auto loc = default_two_term_locations();
    for (int m = 0; m < 3; ++m) {
        testutil::RunningStats s;
        for (std::size_t i = 0; i < cfg.N; ++i)
            if (d.s_true[i] == m)
                for (Eigen::Index j = 0; j < 8; ++j) s.push(d.f_true(static_cast<Eigen::Index>(i), j));
        const double target = 1.0 / loc(0, m) + 1.0 / loc(2, m);
        CHECK(s.var() == doctest::Approx(target).epsilon(0.12));
    }
}

TEST_CASE("hyperprior locations are positive and deterministic") {
    SynthConfig cfg;
    cfg.N = 20;
    cfg.T = 10;
    cfg.M = 4;
    cfg.seed = 12;
    const auto a = gen_two_term_se(cfg);
    const auto b = gen_two_term_se(cfg);
    CHECK(a.locations_true.rows() == 4);
    CHECK(a.locations_true.cols() == 4);
    CHECK((a.locations_true.array() > 0).all());
    CHECK(a.locations_true == b.locations_true);
    cfg.M = 3;
    cfg.se_from_hyperpriors = true;
    CHECK(gen_two_term_se(cfg).locations_true != Eigen::MatrixXd(default_two_term_locations()));
}

TEST_CASE("proper GMRF with rho = 0 has independent cells") {
    SynthConfig cfg;
    cfg.generator = Generator::ProperGmrf;
    cfg.N = 3000;
    cfg.T = 6;
    cfg.M = 1;
    cfg.rho = 0.0;
    cfg.kappas = std::vector<double>{2.0};
    const auto d = generate(cfg);
    const auto s = rw2_structure(6);
    for (Eigen::Index j = 0; j < 6; ++j) {
        testutil::RunningStats st;
        for (Eigen::Index i = 0; i < d.f_true.rows(); ++i) st.push(d.f_true(i, j));
        CHECK(st.var() == doctest::Approx(1.0 / (2.0 * s.D(j))).epsilon(0.07));
    }
    const Eigen::MatrixXd c = (d.f_true.transpose() * d.f_true) / static_cast<double>(d.f_true.rows());
    CHECK(std::abs(c(1, 2)) < 0.02);
}

TEST_CASE("proper GMRF sample precision matches kappa (D - rho Omega)") {
    SynthConfig cfg;
    cfg.generator = Generator::ProperGmrf;
    cfg.N = 10000;
    cfg.T = 10;
    cfg.M = 1;
    cfg.rho = 0.95;
    cfg.kappas = std::vector<double>{1.5};
    cfg.seed = 21;
    const auto d = generate(cfg);
    const Eigen::MatrixXd cov = (d.f_true.transpose() * d.f_true) / static_cast<double>(cfg.N);
    const Eigen::MatrixXd prec = cov.inverse();
    const Eigen::MatrixXd R = proper_gmrf_precision(rw2_structure(10), 1.5, 0.95);
    for (Eigen::Index a = 0; a < 10; ++a)
        for (Eigen::Index b = 0; b < 10; ++b) {
            if (std::abs(R(a, b)) > 1e-12) CHECK(prec(a, b) == doctest::Approx(R(a, b)).epsilon(0.05));
            else CHECK(std::abs(prec(a, b)) < 0.05 * std::sqrt(R(a, a) * R(b, b)));
        }
}

TEST_CASE("larger kappa gives smaller variance") {
    double last = INFINITY;
    for (double k : {0.5, 1.0, 2.0}) {
        SynthConfig cfg;
        cfg.generator = Generator::ProperGmrf;
        cfg.N = 200;
        cfg.T = 20;
        cfg.M = 1;
        cfg.kappas = std::vector<double>{k};
        const auto d = generate(cfg);
        const double v = d.f_true.array().square().mean();
        CHECK(v < last);
        last = v;
    }
}

TEST_CASE("proper GMRF kappas drawn per cluster") {
    SynthConfig cfg;
    cfg.generator = Generator::ProperGmrf;
    cfg.N = 30;
    cfg.T = 12;
    const auto d = generate(cfg);
    CHECK(d.locations_true.rows() == 1);
    CHECK(d.locations_true.cols() == 3);
    CHECK((d.locations_true.array() > 0).all());
}

TEST_CASE("generation is bitwise deterministic in the seed") {
    for (auto g : {Generator::TwoTermSE, Generator::ProperGmrf}) {
        SynthConfig cfg;
        cfg.generator = g;
        cfg.N = 15;
        cfg.T = 20;
        cfg.seed = 8;
        const auto a = generate(cfg);
        const auto b = generate(cfg);
        CHECK(a.panel.values() == b.panel.values());
        CHECK(a.f_true == b.f_true);
        CHECK(a.s_true == b.s_true);
        CHECK(a.tau_eps_true == b.tau_eps_true);
        cfg.seed = 9;
        CHECK(generate(cfg).f_true != a.f_true);
    }
}

TEST_CASE("every true cluster is non-empty") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        SynthConfig cfg;
        cfg.N = 4;
        cfg.T = 6;
        cfg.seed = seed;
        const auto d = generate(cfg);
        CHECK(std::set<int>(d.s_true.begin(), d.s_true.end()).size() == 3);
    }
}

TEST_CASE("configuration validation") {
    SynthConfig cfg;
    cfg.M = 0;
    CHECK_THROWS_AS(generate(cfg), ParameterError);
    cfg = SynthConfig{};
    cfg.N = 2;
    CHECK_THROWS_AS(generate(cfg), ParameterError);
    cfg = SynthConfig{};
    cfg.noise_to_signal = 0.0;
    CHECK_THROWS_AS(generate(cfg), ParameterError);
    cfg = SynthConfig{};
    cfg.generator = Generator::ProperGmrf;
    cfg.rho = 1.0;
    CHECK_THROWS_AS(generate(cfg), ParameterError);
    cfg = SynthConfig{};
    cfg.kappas = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(generate(cfg), ParameterError);
    cfg = SynthConfig{};
    cfg.se_locations = Eigen::MatrixXd::Ones(4, 2);
    CHECK_THROWS_AS(generate(cfg), ParameterError);
    CHECK_THROWS_AS(generator_from_string("ar1"), ParameterError);
    CHECK(generator_from_string(to_string(Generator::ProperGmrf)) == Generator::ProperGmrf);
}

TEST_CASE("pairwise truth table") {
    const auto one = misclustering_truth_table({0, 0, 0});
    CHECK(one.all());
    const auto single = misclustering_truth_table({0, 1, 2});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(single(i, j) == (i == j));
    const auto t = misclustering_truth_table({0, 0, 1});
    CHECK(t(0, 1));
    CHECK(t(1, 0));
    CHECK(!t(0, 2));
    CHECK(!t(1, 2));
    CHECK(t(2, 2));
    const auto relabeled = misclustering_truth_table({1, 1, 0});
    CHECK((t == relabeled).all());
}
