#pragma once

#include "simdiv/bounds.hpp"
#include "simdiv/common.hpp"
#include "simdiv/rng.hpp"
#include "simdiv/sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

// CSV ingestion (RFC-4180), full-precision serialization, order parsing,
// and persistence of research findings.

namespace simdiv::io {

// Parses RFC-4180 CSV: quoted fields may contain commas, escaped quotes
// ("") and newlines; records end at CR, LF, or CRLF outside quotes.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;

    auto end_field = [&]() {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_started) {
                    quoted = true;
                    field_started = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (in.peek() == '\n') in.get(c);
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (quoted) throw Error("CSV ends inside a quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

inline std::vector<std::vector<std::string>> read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_csv(in);
}

namespace detail {

inline std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::optional<double> parse_number(const std::string& raw) {
    const std::string s = trimmed(raw);
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace detail

inline std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

inline std::string format_order(Order q) {
    if (std::isinf(q)) return q > 0 ? "inf" : "-inf";
    return format_double(q);
}

inline Order parse_order(const std::string& token) {
    const std::string s = detail::lowercase(detail::trimmed(token));
    if (s == "inf" || s == "+inf" || s == "infinity") return order::infinity;
    if (s == "-inf" || s == "-infinity") return -order::infinity;
    const auto v = detail::parse_number(s);
    if (!v || std::isnan(*v)) {
        throw Error("cannot parse order '" + token + "' (number, inf, or -inf)");
    }
    return *v;
}

inline std::vector<Order> parse_order_list(const std::string& csv) {
    std::vector<Order> orders;
    std::stringstream ss(csv);
    std::string token;
    while (std::getline(ss, token, ',')) orders.push_back(parse_order(token));
    if (orders.empty()) throw Error("order list is empty");
    return orders;
}

// Dense numeric matrix. A first row with any non-numeric cell is taken as a
// header and skipped.
inline Matrix read_matrix_csv(std::istream& in) {
    auto records = read_csv(in);
    if (!records.empty() && records.back().size() == 1 &&
        detail::trimmed(records.back()[0]).empty()) {
        records.pop_back();  // trailing blank line
    }
    if (records.empty()) throw Error("matrix CSV is empty");

    std::size_t first = 0;
    for (const std::string& cell : records[0]) {
        if (!detail::parse_number(cell)) {
            first = 1;
            break;
        }
    }
    if (first >= records.size()) throw Error("matrix CSV has no data rows");

    const std::size_t rows = records.size() - first;
    const std::size_t cols = records[first].size();
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = records[first + i];
        if (row.size() != cols) {
            throw Error("matrix CSV row " + std::to_string(i + 1) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(cols));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            const auto v = detail::parse_number(row[j]);
            if (!v) {
                throw Error("matrix CSV has non-numeric value '" + row[j] +
                            "' at data row " + std::to_string(i + 1) +
                            ", column " + std::to_string(j + 1));
            }
            m(static_cast<Index>(i), static_cast<Index>(j)) = *v;
        }
    }
    return m;
}

inline Matrix read_matrix_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_matrix_csv(in);
}

// Full double precision (17 significant digits).
inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix_csv_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_matrix_csv(out, m);
}

struct FeatureCsvOptions {
    std::vector<std::string> id_column_names{"id", "index", "uid", "key"};
    std::optional<Index> subsample;  // rows drawn uniformly without replacement
    std::uint64_t seed = 0;
};

struct FeatureLoadReport {
    Matrix features;
    std::vector<std::string> kept_columns;
    std::vector<std::pair<std::string, std::string>> dropped_columns;  // name, reason
    Index rows_before_subsample = 0;
};

// Reads a feature CSV with a header row. Identifier columns (case-insensitive
// name match) and columns containing any non-numeric value are dropped and
// reported. Subsampling is deterministic in the seed.
inline FeatureLoadReport load_features(std::istream& in,
                                       const FeatureCsvOptions& options = {}) {
    auto records = read_csv(in);
    if (!records.empty() && records.back().size() == 1 &&
        detail::trimmed(records.back()[0]).empty()) {
        records.pop_back();
    }
    if (records.size() < 2) {
        throw Error("feature CSV needs a header row and at least one data row");
    }
    const auto& header = records[0];
    const std::size_t cols = header.size();
    const std::size_t rows = records.size() - 1;

    FeatureLoadReport report;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < cols; ++j) {
        const std::string name = detail::trimmed(header[j]);
        const std::string lower = detail::lowercase(name);
        bool is_id = false;
        for (const std::string& pattern : options.id_column_names) {
            if (lower == detail::lowercase(pattern)) {
                is_id = true;
                break;
            }
        }
        if (is_id) {
            report.dropped_columns.emplace_back(name, "identifier column");
            continue;
        }
        bool numeric = true;
        std::string bad_reason;
        for (std::size_t i = 1; i <= rows; ++i) {
            if (j >= records[i].size() || !detail::parse_number(records[i][j])) {
                numeric = false;
                bad_reason = "non-numeric value at data row " + std::to_string(i);
                break;
            }
        }
        if (!numeric) {
            report.dropped_columns.emplace_back(name, bad_reason);
            continue;
        }
        keep.push_back(j);
        report.kept_columns.push_back(name);
    }
    if (keep.empty()) {
        throw Error("no numeric feature columns remain after filtering");
    }

    std::vector<std::size_t> row_order(rows);
    for (std::size_t i = 0; i < rows; ++i) row_order[i] = i + 1;
    report.rows_before_subsample = static_cast<Index>(rows);
    if (options.subsample && static_cast<std::size_t>(*options.subsample) < rows) {
        const auto s = static_cast<std::size_t>(*options.subsample);
        if (s < 1) throw Error("subsample size must be >= 1");
        Rng rng(options.seed);
        // Partial Fisher-Yates, then restore file order within the sample.
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(rows - i));
            std::swap(row_order[i], row_order[j]);
        }
        row_order.resize(s);
        std::sort(row_order.begin(), row_order.end());
    }

    report.features.resize(static_cast<Index>(row_order.size()),
                           static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < row_order.size(); ++i) {
        const auto& row = records[row_order[i]];
        for (std::size_t j = 0; j < keep.size(); ++j) {
            report.features(static_cast<Index>(i), static_cast<Index>(j)) =
                *detail::parse_number(row[keep[j]]);
        }
    }
    return report;
}

inline FeatureLoadReport load_features_file(const std::string& path,
                                            const FeatureCsvOptions& options = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return load_features(in, options);
}

// --------------------------------------------------------------------------
// Findings and search-record serialization
// --------------------------------------------------------------------------

inline nlohmann::json order_json(Order q) {
    if (std::isinf(q)) return q > 0 ? "inf" : "-inf";
    return q;
}

inline nlohmann::json search_record_json(const SearchRecord& record) {
    nlohmann::json j;
    j["q"] = order_json(record.q);
    j["n"] = record.n;
    j["r"] = record.r;
    j["scale"] = record.scale;
    j["replicate"] = record.replicate;
    j["seed"] = record.seed;
    j["gap"] = record.gap;
    j["confirmed_gap"] = record.confirmed_gap;
    j["iterations"] = record.iterations;
    j["status"] = search_status_name(record.status);
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(record.minimizer.size()));
    for (Index i = 0; i < record.minimizer.rows(); ++i) {
        for (Index c = 0; c < record.minimizer.cols(); ++c) {
            flat.push_back(record.minimizer(i, c));
        }
    }
    j["Z"] = flat;
    return j;
}

// One line per ("q", n, r, scale) grid point with the minimum gap over
// replicates; failed replicates are skipped.
inline void write_search_summary_csv(std::ostream& out,
                                     const std::vector<SearchRecord>& records) {
    out << "q,n,r,scale,min_gap,candidates,failures\n";
    std::size_t i = 0;
    while (i < records.size()) {
        const SearchRecord& head = records[i];
        double min_gap = std::numeric_limits<double>::infinity();
        int candidates = 0;
        int failures = 0;
        std::size_t j = i;
        for (; j < records.size(); ++j) {
            const SearchRecord& rec = records[j];
            if (rec.q != head.q || rec.n != head.n || rec.r != head.r ||
                rec.scale != head.scale) {
                break;
            }
            if (rec.status == SearchStatus::failed) {
                ++failures;
                continue;
            }
            min_gap = std::min(min_gap, rec.gap);
            if (rec.status == SearchStatus::counterexample_candidate) ++candidates;
        }
        out << format_order(head.q) << ',' << head.n << ',' << head.r << ','
            << format_double(head.scale) << ','
            << (std::isfinite(min_gap) ? format_double(min_gap) : "") << ','
            << candidates << ',' << failures << '\n';
        i = j;
    }
}

inline void write_sweep_cells_csv(std::ostream& out, const SweepResult& result) {
    out << "dataset_id,k,q,lcr,vs,status\n";
    for (const SweepCell& cell : result.cells) {
        out << cell.dataset << ',' << format_double(cell.k) << ','
            << format_order(cell.q) << ',';
        if (cell.status == "ok") {
            out << format_double(cell.lcr) << ',' << format_double(cell.vs);
        } else {
            out << ',';
        }
        out << ',' << '"' << cell.status << '"' << '\n';
    }
}

inline void write_sweep_stats_csv(std::ostream& out, const SweepResult& result) {
    out << "k,q,pearson,r2,cov,flag\n";
    for (const SweepStats& stats : result.stats) {
        out << format_double(stats.k) << ',' << format_order(stats.q) << ',';
        if (stats.flag == "ok" || stats.flag == "degenerate") {
            out << format_double(stats.pearson) << ','
                << format_double(stats.r_squared) << ','
                << format_double(stats.covariance);
        } else {
            out << ",,";
        }
        out << ',' << '"' << stats.flag << '"' << '\n';
    }
}

// Appends one JSON object per line; used to persist any observed violation
// of a bound so a failing run leaves evidence behind.
inline void append_finding(const std::string& path, const nlohmann::json& finding) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot open findings file " + path);
    out << finding.dump() << '\n';
}

inline nlohmann::json gap_finding(const std::string& kind, const GapReport& report,
                                  const Matrix& z) {
    nlohmann::json j;
    j["kind"] = kind;
    j["q"] = order_json(report.q);
    j["gap"] = report.gap;
    j["vs"] = report.vs_value;
    j["lcr"] = report.lcr_value;
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(z.size()));
    for (Index i = 0; i < z.rows(); ++i) {
        for (Index c = 0; c < z.cols(); ++c) flat.push_back(z(i, c));
    }
    j["Z"] = flat;
    j["n"] = z.rows();
    return j;
}

}  // namespace simdiv::io
