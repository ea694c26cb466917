#include "growfn/panel.hpp"

#include "growfn/csv.hpp"
#include "growfn/error.hpp"
#include "growfn/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

namespace growfn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_header_id(const std::string& cell) {
    std::string lower;
    for (char c : cell) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "series_id" || lower == "id" || lower == "series";
}

}  // namespace

Panel::Panel(Eigen::MatrixXd values, BoolMatrix mask, std::vector<double> times,
             std::vector<std::string> series_ids, std::optional<std::vector<Standardization>> standardization)
    : values_(std::move(values)),
      mask_(std::move(mask)),
      times_(std::move(times)),
      series_ids_(std::move(series_ids)),
      standardization_(std::move(standardization)) {
    const auto n = values_.rows();
    const auto t = values_.cols();
    if (n < 1) throw ParameterError("panel needs at least one series");
    if (t < 5) throw ParameterError("panel needs at least 5 time points, got " + std::to_string(t));
    if (mask_.rows() != n || mask_.cols() != t) throw ParameterError("mask shape does not match values");
    if (static_cast<Eigen::Index>(times_.size()) != t) throw ParameterError("times length does not match values");
    if (static_cast<Eigen::Index>(series_ids_.size()) != n) throw ParameterError("series id count does not match values");
    if (standardization_ && static_cast<Eigen::Index>(standardization_->size()) != n)
        throw ParameterError("standardization length does not match values");
    for (std::size_t j = 1; j < times_.size(); ++j)
        if (!(times_[j] > times_[j - 1])) throw ParameterError("times must be strictly increasing");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask_.row(i).any()) throw ParameterError("series '" + series_ids_[static_cast<std::size_t>(i)] + "' has no observed entries");
        for (Eigen::Index j = 0; j < t; ++j) {
            if (mask_(i, j) && !std::isfinite(values_(i, j)))
                throw ParameterError("observed cell holds a non-finite value");
            if (!mask_(i, j)) values_(i, j) = kNaN;
        }
    }
}

Panel Panel::from_matrix(const Eigen::MatrixXd& values) {
    std::vector<double> times(static_cast<std::size_t>(values.cols()));
    std::iota(times.begin(), times.end(), 1.0);
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < values.rows(); ++i) ids.push_back("s" + std::to_string(i + 1));
    return Panel(values, BoolMatrix::Constant(values.rows(), values.cols(), true), std::move(times), std::move(ids));
}

std::size_t Panel::observed_count() const { return static_cast<std::size_t>(mask_.count()); }

std::vector<Eigen::Index> Panel::observed_indices(std::size_t i) const {
    std::vector<Eigen::Index> idx;
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < mask_.cols(); ++j)
        if (mask_(row, j)) idx.push_back(j);
    return idx;
}

double Panel::back_transform(std::size_t i, double z) const {
    if (!standardization_) return z;
    const auto& st = (*standardization_)[i];
    return st.mean + st.sd * z;
}

Panel Panel::destandardized() const {
    if (!standardization_) return *this;
    Eigen::MatrixXd v = values_;
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index j = 0; j < v.cols(); ++j)
            if (mask_(i, j)) v(i, j) = back_transform(static_cast<std::size_t>(i), v(i, j));
    return Panel(std::move(v), mask_, times_, series_ids_);
}

Panel load_panel(const std::filesystem::path& path, PanelLayout layout) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw FormatError("empty panel file: " + path.string());

    if (layout == PanelLayout::SeriesRows) {
        std::size_t first = 0;
        std::vector<double> times;
        const std::size_t width = rows[0].size();
        if (width < 2) throw FormatError("series-rows layout needs an id column and values");
        if (is_header_id(rows[0][0])) {
            first = 1;
            bool numeric = true;
            for (std::size_t c = 1; c < width; ++c) {
                auto v = csv::parse_number(rows[0][c]);
                if (!v) { numeric = false; break; }
                times.push_back(*v);
            }
            if (!numeric) times.clear();
        }
        const std::size_t t = width - 1;
        if (times.empty()) {
            times.resize(t);
            std::iota(times.begin(), times.end(), 1.0);
        }
        const std::size_t n = rows.size() - first;
        Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
        BoolMatrix mask(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
        std::vector<std::string> ids;
        for (std::size_t r = first; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() != width)
                throw FormatError("ragged row " + std::to_string(r + 1) + ": expected " + std::to_string(width) +
                                  " fields, found " + std::to_string(row.size()));
            ids.push_back(row[0]);
            const auto i = static_cast<Eigen::Index>(r - first);
            for (std::size_t c = 1; c < width; ++c) {
                const auto j = static_cast<Eigen::Index>(c - 1);
                if (csv::is_missing(row[c])) {
                    values(i, j) = kNaN;
                    mask(i, j) = false;
                    continue;
                }
                auto v = csv::parse_number(row[c]);
                if (!v) throw ParseError("non-numeric cell '" + row[c] + "'", r + 1, c + 1);
                values(i, j) = *v;
                mask(i, j) = true;
            }
        }
        return Panel(std::move(values), std::move(mask), std::move(times), std::move(ids));
    }

    // long format: series_id, time, value
    std::size_t first = 0;
    if (rows[0].size() == 3 && !csv::parse_number(rows[0][1])) first = 1;
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> id_index;
    std::vector<double> all_times;
    struct Entry { std::size_t series; double time; double value; bool observed; };
    std::vector<Entry> entries;
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 3)
            throw FormatError("ragged row " + std::to_string(r + 1) + ": long format needs 3 fields, found " +
                              std::to_string(row.size()));
        auto [it, inserted] = id_index.emplace(row[0], ids.size());
        if (inserted) ids.push_back(row[0]);
        auto t = csv::parse_number(row[1]);
        if (!t) throw ParseError("non-numeric time '" + row[1] + "'", r + 1, 2);
        Entry e{it->second, *t, kNaN, false};
        if (!csv::is_missing(row[2])) {
            auto v = csv::parse_number(row[2]);
            if (!v) throw ParseError("non-numeric cell '" + row[2] + "'", r + 1, 3);
            e.value = *v;
            e.observed = true;
        }
        entries.push_back(e);
        all_times.push_back(*t);
    }
    std::sort(all_times.begin(), all_times.end());
    all_times.erase(std::unique(all_times.begin(), all_times.end()), all_times.end());
    const auto n = static_cast<Eigen::Index>(ids.size());
    const auto tn = static_cast<Eigen::Index>(all_times.size());
    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(n, tn, kNaN);
    BoolMatrix mask = BoolMatrix::Constant(n, tn, false);
    BoolMatrix seen = BoolMatrix::Constant(n, tn, false);
    for (const auto& e : entries) {
        const auto j = static_cast<Eigen::Index>(std::lower_bound(all_times.begin(), all_times.end(), e.time) - all_times.begin());
        const auto i = static_cast<Eigen::Index>(e.series);
        if (seen(i, j)) throw FormatError("duplicate entry for series '" + ids[e.series] + "' at time " + std::to_string(e.time));
        seen(i, j) = true;
        values(i, j) = e.value;
        mask(i, j) = e.observed;
    }
    return Panel(std::move(values), std::move(mask), std::move(all_times), std::move(ids));
}

void write_panel(const Panel& panel, const std::filesystem::path& path, PanelLayout layout) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    const auto& v = panel.values();
    const auto& times = panel.times();
    if (layout == PanelLayout::SeriesRows) {
        out << "series_id";
        for (double t : times) out << ',' << csv::format_number(t);
        out << '\n';
        for (std::size_t i = 0; i < panel.num_series(); ++i) {
            out << panel.series_ids()[i];
            for (std::size_t j = 0; j < panel.num_times(); ++j) {
                out << ',';
                if (panel.observed(i, j)) out << csv::format_number(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                else out << "NA";
            }
            out << '\n';
        }
    } else {
        out << "series_id,time,value\n";
        for (std::size_t i = 0; i < panel.num_series(); ++i)
            for (std::size_t j = 0; j < panel.num_times(); ++j) {
                out << panel.series_ids()[i] << ',' << csv::format_number(times[j]) << ',';
                if (panel.observed(i, j)) out << csv::format_number(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                else out << "NA";
                out << '\n';
            }
    }
    if (!out) throw FormatError("write failed: " + path.string());
}

Panel standardize(const Panel& p) {
    Eigen::MatrixXd v = p.values();
    std::vector<Standardization> st(p.num_series());
    for (std::size_t i = 0; i < p.num_series(); ++i) {
        const auto idx = p.observed_indices(i);
        const auto& id = p.series_ids()[i];
        if (idx.size() < 2) throw DegenerateSeriesError(id, "fewer than two observed entries");
        const auto row = static_cast<Eigen::Index>(i);
        double mean = 0.0;
        for (auto j : idx) mean += v(row, j);
        mean /= static_cast<double>(idx.size());
        double ss = 0.0;
        for (auto j : idx) ss += (v(row, j) - mean) * (v(row, j) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(idx.size() - 1));
        if (!(sd > 0.0) || !std::isfinite(sd)) throw DegenerateSeriesError(id, "zero sample standard deviation");
        for (auto j : idx) v(row, j) = (v(row, j) - mean) / sd;
        Standardization prior;
        if (p.standardization()) prior = (*p.standardization())[i];
        st[i] = {prior.mean + prior.sd * mean, prior.sd * sd};
    }
    return Panel(std::move(v), p.mask(), p.times(), p.series_ids(), std::move(st));
}

HoldoutSplit make_holdout(const Panel& p, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("holdout fraction must lie in (0, 1)");
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < p.num_series(); ++i)
        for (std::size_t j = 0; j < p.num_times(); ++j)
            if (p.observed(i, j)) cells.push_back({i, j});
    const auto count = static_cast<std::size_t>(std::round(fraction * static_cast<double>(cells.size())));
    if (count < 1) throw ParameterError("holdout fraction selects no cells");
    if (count >= cells.size()) throw ParameterError("holdout fraction selects every observed cell");

    Rng rng(seed);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t pick = k + rng.index(cells.size() - k);
        std::swap(cells[k], cells[pick]);
    }
    cells.resize(count);

    BoolMatrix mask = p.mask();
    std::vector<double> truth;
    truth.reserve(count);
    for (const auto& c : cells) {
        const auto i = static_cast<Eigen::Index>(c.series);
        const auto j = static_cast<Eigen::Index>(c.time);
        truth.push_back(p.values()(i, j));
        mask(i, j) = false;
    }
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
        if (!mask.row(i).any())
            throw ParameterError("holdout removed every observation of series '" + p.series_ids()[static_cast<std::size_t>(i)] + "'");
    Panel train(p.values(), std::move(mask), p.times(), p.series_ids(), p.standardization());
    return {std::move(train), std::move(cells), std::move(truth)};
}

std::vector<double> unit_spaced(const std::vector<double>& times) {
    if (times.size() < 2) return std::vector<double>(times.size(), 0.0);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < times.size(); ++j) gap = std::min(gap, times[j] - times[j - 1]);
    std::vector<double> out(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) out[j] = (times[j] - times[0]) / gap;
    return out;
}

}  // namespace growfn
