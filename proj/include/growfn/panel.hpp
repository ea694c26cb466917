#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace growfn {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class PanelLayout { SeriesRows, LongFormat };

/// Per-series location and scale removed by standardize().
struct Standardization {
    double mean = 0.0;
    double sd = 1.0;
};

/// N x T matrix of noisy series with an observation mask.
///
/// Immutable after construction. Missing cells hold NaN in values() and
/// false in mask(). The constructor enforces N >= 1, T >= 5, strictly
/// increasing times and at least one observation per series.
class Panel {
public:
    Panel(Eigen::MatrixXd values, BoolMatrix mask, std::vector<double> times,
          std::vector<std::string> series_ids,
          std::optional<std::vector<Standardization>> standardization = std::nullopt);

    /// Fully observed panel with times 1..T and ids s1..sN.
    static Panel from_matrix(const Eigen::MatrixXd& values);

    std::size_t num_series() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t num_times() const { return static_cast<std::size_t>(values_.cols()); }

    const Eigen::MatrixXd& values() const { return values_; }
    const BoolMatrix& mask() const { return mask_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<std::string>& series_ids() const { return series_ids_; }
    const std::optional<std::vector<Standardization>>& standardization() const { return standardization_; }

    bool observed(std::size_t i, std::size_t j) const { return mask_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
    std::size_t observed_count() const;
    bool fully_observed() const { return mask_.all(); }

    /// Indices of observed times for series i.
    std::vector<Eigen::Index> observed_indices(std::size_t i) const;

    /// Maps a standardized value of series i back to response units.
    double back_transform(std::size_t i, double z) const;
    /// Copy of the panel in response units; identity when no standardization is recorded.
    Panel destandardized() const;

private:
    Eigen::MatrixXd values_;
    BoolMatrix mask_;
    std::vector<double> times_;
    std::vector<std::string> series_ids_;
    std::optional<std::vector<Standardization>> standardization_;
};

struct Cell {
    std::size_t series;
    std::size_t time;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Training panel with a random subset of observed cells masked out.
struct HoldoutSplit {
    Panel train;
    std::vector<Cell> test_index;
    std::vector<double> test_truth;
};

Panel load_panel(const std::filesystem::path& path, PanelLayout layout);
void write_panel(const Panel& panel, const std::filesystem::path& path, PanelLayout layout);

/// Centers and scales each series over its observed entries (n-1 sd).
///
/// Throws DegenerateSeriesError when a series has fewer than two observations
/// or zero spread. Standardizing an already standardized panel composes the
/// recorded (mean, sd) so back-transformation still reaches the original units.
Panel standardize(const Panel& p);

/// Holds out round(fraction * observed) cells drawn uniformly without replacement.
HoldoutSplit make_holdout(const Panel& p, double fraction, std::uint64_t seed);

/// Times shifted to start at 0 and divided by the smallest gap.
std::vector<double> unit_spaced(const std::vector<double>& times);

}  // namespace growfn
