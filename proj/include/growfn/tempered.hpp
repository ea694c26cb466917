#pragma once

#include "growfn/rng.hpp"

#include <functional>
#include <vector>

namespace growfn {

using LogDensity = std::function<double(double)>;

struct SliceResult {
    double value;
    double logpdf;  // target log density at value
};

/// Univariate slice sampling with stepping out and shrinkage.
///
/// logpdf_current must equal logpdf(current) and be finite. Throws
/// NumericError after 10^6 interval expansions.
SliceResult slice_step(double current, const LogDensity& logpdf, double logpdf_current, double width, Rng& rng);

struct TemperedResult {
    double value;
    bool accepted;
    double log_ratio;  // log acceptance ratio of the proposal (0 for an empty ladder)
};

/// Tempered-transition Metropolis update of one scalar.
///
/// ladder holds log densities of successively coarser approximations to
/// exact. One slice step is made at each level on the way up (1..n) and on
/// the way down (n..1); the end point is accepted against exact with the
/// telescoping ratio
///   prod_{i<n} p_{i+1}(up_i)/p_i(up_i) * prod_{i<n} p_i(down_i)/p_{i+1}(down_i)
/// where p_0 is exact. An empty ladder is a plain slice step on exact.
TemperedResult tempered_update_scalar(double current, const LogDensity& exact, const std::vector<LogDensity>& ladder,
                                      double slice_width, Rng& rng);

}  // namespace growfn
