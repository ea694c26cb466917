#include "growfn/tempered.hpp"

#include "growfn/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace growfn {

namespace {

constexpr long kMaxExpansions = 1000000;

void require_finite(double lp, double x, const char* where) {
    if (!std::isfinite(lp)) {
        std::ostringstream os;
        os << where << ": log density is not finite at " << x;
        throw NumericError(os.str());
    }
}

}  // namespace

SliceResult slice_step(double current, const LogDensity& logpdf, double logpdf_current, double width, Rng& rng) {
    require_finite(logpdf_current, current, "slice_step");
    if (!(width > 0.0)) throw ParameterError("slice width must be positive");
    const double level = logpdf_current - (-std::log(rng.uniform_pos()));

    double left = current - width * rng.uniform();
    double right = left + width;
    long expansions = 0;
    while (logpdf(left) > level) {
        left -= width;
        if (++expansions > kMaxExpansions) throw NumericError("slice_step: stepping out exceeded 1e6 expansions");
    }
    while (logpdf(right) > level) {
        right += width;
        if (++expansions > kMaxExpansions) throw NumericError("slice_step: stepping out exceeded 1e6 expansions");
    }

    while (true) {
        const double x = left + rng.uniform() * (right - left);
        const double lp = logpdf(x);
        if (lp > level) return {x, lp};
        if (x < current) left = x;
        else right = x;
        if (!(right > left)) return {current, logpdf_current};
    }
}

TemperedResult tempered_update_scalar(double current, const LogDensity& exact, const std::vector<LogDensity>& ladder,
                                      double slice_width, Rng& rng) {
    const double lp0 = exact(current);
    require_finite(lp0, current, "tempered_update_scalar");
    const std::size_t n = ladder.size();
    if (n == 0) {
        const auto r = slice_step(current, exact, lp0, slice_width, rng);
        return {r.value, true, 0.0};
    }

    double log_ratio = 0.0;
    // Up: x is the state at level i with density lp_here under level i.
    double x = current;
    double lp_here = lp0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lp_next = ladder[i](x);
        log_ratio += lp_next - lp_here;
        if (!std::isfinite(lp_next)) return {current, false, -std::numeric_limits<double>::infinity()};
        const auto r = slice_step(x, ladder[i], lp_next, slice_width, rng);
        x = r.value;
        lp_here = r.logpdf;
    }
    // Down: slice at level i+1, then score under level i.
    for (std::size_t k = n; k-- > 0;) {
        const auto r = slice_step(x, ladder[k], lp_here, slice_width, rng);
        x = r.value;
        const double lp_lower = (k == 0) ? exact(x) : ladder[k - 1](x);
        log_ratio += lp_lower - r.logpdf;
        lp_here = lp_lower;
        if (!std::isfinite(lp_lower)) return {current, false, -std::numeric_limits<double>::infinity()};
    }
    const bool accept = log_ratio >= 0.0 || std::log(rng.uniform_pos()) < log_ratio;
    return {accept ? x : current, accept, log_ratio};
}

}  // namespace growfn
