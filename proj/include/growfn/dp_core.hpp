#pragma once

#include "growfn/error.hpp"
#include "growfn/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace growfn {

/// Shape/rate parameterized gamma prior.
struct GammaPrior {
    double shape = 1.0;
    double rate = 1.0;
};

/// Partition of N series into M clusters, each carrying a location.
///
/// Labels are 0-based in memory (serialized 1-based). Between sweeps every
/// cluster is non-empty and labels follow first appearance in s.
template <class Location>
struct ClusterState {
    std::vector<int> s;
    std::vector<Location> locations;
    std::vector<int> counts;
    double alpha = 1.0;

    std::size_t num_series() const { return s.size(); }
    std::size_t num_clusters() const { return locations.size(); }

    /// Every series in one cluster.
    static ClusterState single(std::size_t n, Location loc, double alpha) {
        ClusterState st;
        st.s.assign(n, 0);
        st.locations = {loc};
        st.counts = {static_cast<int>(n)};
        st.alpha = alpha;
        return st;
    }

    /// Throws std::logic_error when counts disagree with s or a cluster is empty.
    void check_invariants() const {
        std::vector<int> hist(locations.size(), 0);
        for (int label : s) {
            if (label < 0 || static_cast<std::size_t>(label) >= locations.size())
                throw std::logic_error("cluster label out of range");
            ++hist[static_cast<std::size_t>(label)];
        }
        if (hist != counts) throw std::logic_error("cluster counts disagree with assignments");
        for (int c : counts)
            if (c < 1) throw std::logic_error("empty cluster present");
    }
};

/// Drops empty clusters and relabels by first appearance in s.
template <class Location>
ClusterState<Location> compact_clusters(const ClusterState<Location>& st) {
    ClusterState<Location> out;
    out.alpha = st.alpha;
    std::vector<int> relabel(st.locations.size(), -1);
    out.s.reserve(st.s.size());
    for (int label : st.s) {
        auto& r = relabel[static_cast<std::size_t>(label)];
        if (r < 0) {
            r = static_cast<int>(out.locations.size());
            out.locations.push_back(st.locations[static_cast<std::size_t>(label)]);
            out.counts.push_back(0);
        }
        out.s.push_back(r);
        ++out.counts[static_cast<std::size_t>(r)];
    }
    return out;
}

/// Normalized Polya-urn probabilities for reassigning one series.
///
/// counts_minus_i holds n_{-i,m} for the M existing clusters (zero counts get
/// zero weight); loglik holds M existing log-likelihoods followed by c_star
/// auxiliary ones, each auxiliary weighted by alpha / c_star. Stabilized by
/// log-sum-exp. Throws DegenerateLikelihoodError when every weight vanishes.
std::vector<double> urn_weights(std::span<const int> counts_minus_i, double alpha, int c_star,
                                std::span<const double> loglik);

/// Index drawn with the given (normalized) probabilities.
std::size_t draw_categorical(std::span<const double> probs, Rng& rng);

/// Two-component gamma mixture of the Escobar-West conditional for alpha given eta.
struct AlphaMixture {
    double weight_high;  // probability of the shape + M component
    double shape_high;
    double shape_low;
    double rate;
};

AlphaMixture escobar_west_mixture(double eta, std::size_t M, std::size_t N, const GammaPrior& prior);

/// One draw of alpha given M clusters among N series.
double resample_alpha(double alpha, std::size_t M, std::size_t N, const GammaPrior& prior, Rng& rng);

/// Removes series i from its cluster; returns true if the cluster became empty.
template <class Location>
bool remove_member(ClusterState<Location>& st, std::size_t i) {
    const auto m = static_cast<std::size_t>(st.s[i]);
    --st.counts[m];
    return st.counts[m] == 0;
}

/// Puts series i into cluster k, or into a new cluster holding aux[k - M] when k >= M.
/// Returns the slot of the cluster that received i.
template <class Location>
std::size_t assign_member(ClusterState<Location>& st, std::size_t i, std::size_t k, std::span<const Location> aux) {
    const std::size_t M = st.locations.size();
    if (k < M) {
        st.s[i] = static_cast<int>(k);
        ++st.counts[k];
        return k;
    }
    st.locations.push_back(aux[k - M]);
    st.counts.push_back(1);
    st.s[i] = static_cast<int>(M);
    return M;
}

/// Neal's auxiliary-location Gibbs sweep (Algorithm 8) over every series in index order.
///
/// draw_base(rng) -> Location samples the base measure.
/// existing_ll(i, m) -> double is the log-likelihood of series i under cluster slot m.
/// aux_ll(i, a, loc) -> double is the log-likelihood under auxiliary a.
/// on_new(slot, a) is called when series i opens a new cluster from auxiliary a.
/// While i is the sole member of its cluster, that cluster's location is the first auxiliary.
/// Clusters are compacted after the sweep.
template <class Location, class DrawBase, class ExistingLL, class AuxLL, class OnNew>
void algorithm8_sweep(ClusterState<Location>& st, int c_star, DrawBase&& draw_base, ExistingLL&& existing_ll,
                      AuxLL&& aux_ll, OnNew&& on_new, Rng& rng) {
    if (c_star < 1) throw ParameterError("c_star must be at least 1");
    std::vector<Location> aux(static_cast<std::size_t>(c_star));
    std::vector<double> ll;
    for (std::size_t i = 0; i < st.s.size(); ++i) {
        const auto current = static_cast<std::size_t>(st.s[i]);
        const bool singleton = remove_member(st, i);
        std::size_t first_fresh = 0;
        if (singleton) {
            aux[0] = st.locations[current];
            first_fresh = 1;
        }
        for (std::size_t a = first_fresh; a < aux.size(); ++a) aux[a] = draw_base(rng);

        const std::size_t M = st.locations.size();
        ll.assign(M + aux.size(), 0.0);
        for (std::size_t m = 0; m < M; ++m)
            if (st.counts[m] > 0) ll[m] = existing_ll(i, m);
        for (std::size_t a = 0; a < aux.size(); ++a) ll[M + a] = aux_ll(i, a, aux[a]);

        const auto probs = urn_weights(st.counts, st.alpha, c_star, ll);
        const std::size_t k = draw_categorical(probs, rng);
        const std::size_t slot = assign_member(st, i, k, std::span<const Location>(aux));
        if (k >= M) on_new(slot, k - M);
    }
    st = compact_clusters(st);
}

/// Conjugate Polya-urn sweep (Neal's Algorithm 2/3 form).
///
/// existing_ll(i, m) as above; new_log_marginal(i) is log of the likelihood
/// integrated against the base measure; draw_post(i, rng) -> Location draws a
/// location from the single-series posterior when a new cluster opens.
template <class Location, class ExistingLL, class NewLogMarginal, class DrawPost>
void conjugate_sweep(ClusterState<Location>& st, ExistingLL&& existing_ll, NewLogMarginal&& new_log_marginal,
                     DrawPost&& draw_post, Rng& rng) {
    std::vector<double> ll;
    std::vector<Location> fresh(1);
    for (std::size_t i = 0; i < st.s.size(); ++i) {
        remove_member(st, i);
        const std::size_t M = st.locations.size();
        ll.assign(M + 1, 0.0);
        for (std::size_t m = 0; m < M; ++m)
            if (st.counts[m] > 0) ll[m] = existing_ll(i, m);
        ll[M] = new_log_marginal(i);
        const auto probs = urn_weights(st.counts, st.alpha, 1, ll);
        const std::size_t k = draw_categorical(probs, rng);
        if (k == M) fresh[0] = draw_post(i, rng);
        assign_member(st, i, k, std::span<const Location>(fresh));
    }
    st = compact_clusters(st);
}

}  // namespace growfn
