#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace growfn {

/// Seeded random stream owned by one chain or generator.
///
/// All draws go through this wrapper so that a run is reproducible from its
/// seed with the same binary. Gamma draws are parameterized by shape and rate.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent substream keyed by (seed, stream, index).
    static Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        Rng r(0);
        r.engine_.seed(seq);
        return r;
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    /// Uniform on the open interval (0, 1); safe under log.
    double uniform_pos() {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return u;
    }

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    double gamma(double shape, double rate) {
        std::gamma_distribution<double> g(shape, 1.0);
        return g(engine_) / rate;
    }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace growfn
