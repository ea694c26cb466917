#include "growfn/draws_io.hpp"

#include "growfn/csv.hpp"
#include "growfn/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <utility>

namespace growfn {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

std::vector<csv::Row> read_table(const fs::path& path, std::size_t min_cols) {
    if (!fs::exists(path)) throw FormatError("missing table " + path.string());
    auto rows = csv::read_file(path);
    if (rows.empty()) throw FormatError("empty table " + path.string());
    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r].size() < min_cols || rows[r].size() != rows[0].size())
            throw FormatError(path.filename().string() + ": row " + std::to_string(r + 1) + " has the wrong number of fields");
    return rows;
}

double num(const csv::Row& row, std::size_t col, std::size_t r, const fs::path& path) {
    auto v = csv::parse_number(row[col]);
    if (!v) throw ParseError(path.filename().string() + ": not a number", r + 1, col + 1);
    return *v;
}

int integer(const csv::Row& row, std::size_t col, std::size_t r, const fs::path& path) {
    const double v = num(row, col, r, path);
    if (v != std::floor(v)) throw ParseError(path.filename().string() + ": not an integer", r + 1, col + 1);
    return static_cast<int>(v);
}

using Key = std::pair<int, int>;

}  // namespace

void ChainDraws::append(const ChainDraws& o) {
    if (model != o.model || num_series != o.num_series || num_times != o.num_times)
        throw ParameterError("cannot pool draws of different models or shapes");
    auto cat = [](auto& a, const auto& b) { a.insert(a.end(), b.begin(), b.end()); };
    cat(chain, o.chain);
    cat(iteration, o.iteration);
    cat(s, o.s);
    cat(locations, o.locations);
    cat(alpha, o.alpha);
    cat(tau_eps, o.tau_eps);
    cat(f_chain, o.f_chain);
    cat(f_iteration, o.f_iteration);
    cat(f, o.f);
}

ChainDraws to_chain_draws(const GpDraws& d, int chain) {
    ChainDraws out;
    out.model = "gp";
    out.location_names = {"theta1", "theta2", "theta3"};
    out.num_series = d.num_series;
    out.num_times = d.num_times;
    out.chain.assign(d.iteration.size(), chain);
    out.iteration = d.iteration;
    out.s = d.s;
    for (const auto& locs : d.locations) {
        std::vector<std::vector<double>> v;
        for (const auto& th : locs) v.push_back({th.theta1, th.theta2, th.theta3});
        out.locations.push_back(std::move(v));
    }
    out.alpha = d.alpha;
    out.tau_eps = d.tau_eps;
    out.f_chain.assign(d.f_iteration.size(), chain);
    out.f_iteration = d.f_iteration;
    out.f = d.f;
    return out;
}

ChainDraws to_chain_draws(const IgmrfDraws& d, int chain) {
    ChainDraws out;
    out.model = "igmrf";
    out.location_names = {"kappa"};
    out.num_series = d.num_series;
    out.num_times = d.num_times;
    out.chain.assign(d.iteration.size(), chain);
    out.iteration = d.iteration;
    out.s = d.s;
    for (const auto& ks : d.kappa) {
        std::vector<std::vector<double>> v;
        for (double k : ks) v.push_back({k});
        out.locations.push_back(std::move(v));
    }
    out.alpha = d.alpha;
    out.tau_eps = d.tau_eps;
    out.f_chain.assign(d.f_iteration.size(), chain);
    out.f_iteration = d.f_iteration;
    out.f = d.f;
    return out;
}

void write_draws(const ChainDraws& d, const fs::path& dir) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "draws_assignments.csv");
        out << "chain,iteration";
        for (std::size_t i = 0; i < d.num_series; ++i) out << ",s" << i + 1;
        out << '\n';
        for (std::size_t k = 0; k < d.size(); ++k) {
            out << d.chain[k] << ',' << d.iteration[k];
            for (int label : d.s[k]) out << ',' << label + 1;
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "draws_locations.csv");
        out << "chain,iteration,cluster";
        for (const auto& n : d.location_names) out << ',' << n;
        out << '\n';
        for (std::size_t k = 0; k < d.size(); ++k)
            for (std::size_t m = 0; m < d.locations[k].size(); ++m) {
                out << d.chain[k] << ',' << d.iteration[k] << ',' << m + 1;
                for (double v : d.locations[k][m]) out << ',' << csv::format_number(v);
                out << '\n';
            }
    }
    {
        auto out = open_out(dir / "draws_scalars.csv");
        out << "chain,iteration,alpha,tau_eps,M\n";
        for (std::size_t k = 0; k < d.size(); ++k)
            out << d.chain[k] << ',' << d.iteration[k] << ',' << csv::format_number(d.alpha[k]) << ','
                << csv::format_number(d.tau_eps[k]) << ',' << d.locations[k].size() << '\n';
    }
    const auto fpath = dir / "draws_f.csv";
    if (d.f.empty()) {
        fs::remove(fpath);
        return;
    }
    auto out = open_out(fpath);
    out << "chain,iteration,series,t,value\n";
    for (std::size_t k = 0; k < d.f.size(); ++k)
        for (Eigen::Index i = 0; i < d.f[k].rows(); ++i)
            for (Eigen::Index j = 0; j < d.f[k].cols(); ++j)
                out << d.f_chain[k] << ',' << d.f_iteration[k] << ',' << i + 1 << ',' << j + 1 << ','
                    << csv::format_number(d.f[k](i, j)) << '\n';
}

ChainDraws read_draws(const fs::path& dir, const std::string& model) {
    ChainDraws d;
    d.model = model;
    const auto apath = dir / "draws_assignments.csv";
    const auto arows = read_table(apath, 3);
    d.num_series = arows[0].size() - 2;
    std::map<Key, std::size_t> index;
    for (std::size_t r = 1; r < arows.size(); ++r) {
        const int c = integer(arows[r], 0, r, apath);
        const int it = integer(arows[r], 1, r, apath);
        std::vector<int> s(d.num_series);
        for (std::size_t i = 0; i < d.num_series; ++i) {
            const int label = integer(arows[r], i + 2, r, apath);
            if (label < 1) throw ParseError("cluster labels are 1-based", r + 1, i + 3);
            s[i] = label - 1;
        }
        index[{c, it}] = d.size();
        d.chain.push_back(c);
        d.iteration.push_back(it);
        d.s.push_back(std::move(s));
    }
    d.locations.assign(d.size(), {});
    d.alpha.assign(d.size(), std::nan(""));
    d.tau_eps.assign(d.size(), std::nan(""));

    const auto lpath = dir / "draws_locations.csv";
    const auto lrows = read_table(lpath, 4);
    d.location_names.assign(lrows[0].begin() + 3, lrows[0].end());
    for (std::size_t r = 1; r < lrows.size(); ++r) {
        auto it = index.find({integer(lrows[r], 0, r, lpath), integer(lrows[r], 1, r, lpath)});
        if (it == index.end()) throw FormatError("draws_locations.csv: row " + std::to_string(r + 1) + " matches no draw");
        std::vector<double> v;
        for (std::size_t c = 3; c < lrows[r].size(); ++c) v.push_back(num(lrows[r], c, r, lpath));
        d.locations[it->second].push_back(std::move(v));
    }

    const auto spath = dir / "draws_scalars.csv";
    const auto srows = read_table(spath, 5);
    for (std::size_t r = 1; r < srows.size(); ++r) {
        auto it = index.find({integer(srows[r], 0, r, spath), integer(srows[r], 1, r, spath)});
        if (it == index.end()) throw FormatError("draws_scalars.csv: row " + std::to_string(r + 1) + " matches no draw");
        d.alpha[it->second] = num(srows[r], 2, r, spath);
        d.tau_eps[it->second] = num(srows[r], 3, r, spath);
    }

    const auto fpath = dir / "draws_f.csv";
    if (!fs::exists(fpath)) return d;
    const auto frows = read_table(fpath, 5);
    std::map<Key, std::size_t> findex;
    std::size_t T = 0;
    for (std::size_t r = 1; r < frows.size(); ++r) T = std::max<std::size_t>(T, static_cast<std::size_t>(integer(frows[r], 3, r, fpath)));
    d.num_times = T;
    for (std::size_t r = 1; r < frows.size(); ++r) {
        const Key key{integer(frows[r], 0, r, fpath), integer(frows[r], 1, r, fpath)};
        auto [it, fresh] = findex.try_emplace(key, d.f.size());
        if (fresh) {
            d.f_chain.push_back(key.first);
            d.f_iteration.push_back(key.second);
            d.f.push_back(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(d.num_series), static_cast<Eigen::Index>(T), std::nan("")));
        }
        const int i = integer(frows[r], 2, r, fpath);
        const int j = integer(frows[r], 3, r, fpath);
        if (i < 1 || static_cast<std::size_t>(i) > d.num_series || j < 1)
            throw ParseError("draws_f.csv: index out of range", r + 1, 3);
        d.f[it->second](i - 1, j - 1) = num(frows[r], 4, r, fpath);
    }
    for (const auto& m : d.f)
        if (m.hasNaN()) throw FormatError("draws_f.csv: incomplete draw");
    return d;
}

void write_cells(const std::vector<Cell>& cells, const std::vector<double>& values, const fs::path& path) {
    if (cells.size() != values.size()) throw ParameterError("one value per cell is required");
    auto out = open_out(path);
    out << "series,t,value\n";
    for (std::size_t k = 0; k < cells.size(); ++k)
        out << cells[k].series + 1 << ',' << cells[k].time + 1 << ',' << csv::format_number(values[k]) << '\n';
}

void read_cells(const fs::path& path, std::vector<Cell>& cells, std::vector<double>& values) {
    const auto rows = read_table(path, 3);
    cells.clear();
    values.clear();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const int i = integer(rows[r], 0, r, path);
        const int j = integer(rows[r], 1, r, path);
        if (i < 1 || j < 1) throw ParseError("cell indices are 1-based", r + 1, 1);
        cells.push_back({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)});
        values.push_back(num(rows[r], 2, r, path));
    }
}

void write_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& header, const fs::path& path) {
    auto out = open_out(path);
    if (!header.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
        out << '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << csv::format_number(m(i, j));
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(const fs::path& path, bool has_header) {
    if (!fs::exists(path)) throw FormatError("missing table " + path.string());
    const auto rows = csv::read_file(path);
    const std::size_t first = has_header ? 1 : 0;
    if (rows.size() <= first) throw FormatError("empty table " + path.string());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size() - first), static_cast<Eigen::Index>(rows[first].size()));
    for (std::size_t r = first; r < rows.size(); ++r) {
        if (rows[r].size() != rows[first].size()) throw FormatError(path.filename().string() + ": ragged row " + std::to_string(r + 1));
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r - first), static_cast<Eigen::Index>(c)) = num(rows[r], c, r, path);
    }
    return m;
}

void write_partition(const std::vector<int>& s, const std::vector<std::string>& ids, const fs::path& path) {
    auto out = open_out(path);
    out << "series_id,cluster\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << (i < ids.size() ? ids[i] : "s" + std::to_string(i + 1)) << ',' << s[i] + 1 << '\n';
}

std::vector<int> read_partition(const fs::path& path) {
    const auto rows = read_table(path, 2);
    std::vector<int> s;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const int label = integer(rows[r], 1, r, path);
        if (label < 1) throw ParseError("cluster labels are 1-based", r + 1, 2);
        s.push_back(label - 1);
    }
    return s;
}

void write_standardization(const std::vector<Standardization>& st, const std::vector<std::string>& ids, const fs::path& path) {
    auto out = open_out(path);
    out << "series_id,mean,sd\n";
    for (std::size_t i = 0; i < st.size(); ++i)
        out << ids.at(i) << ',' << csv::format_number(st[i].mean) << ',' << csv::format_number(st[i].sd) << '\n';
}

std::vector<Standardization> read_standardization(const fs::path& path) {
    const auto rows = read_table(path, 3);
    std::vector<Standardization> st;
    for (std::size_t r = 1; r < rows.size(); ++r) st.push_back({num(rows[r], 1, r, path), num(rows[r], 2, r, path)});
    return st;
}

}  // namespace growfn
