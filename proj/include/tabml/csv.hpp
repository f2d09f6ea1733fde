#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/schema.hpp"

namespace tabml {

namespace csv_detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace csv_detail

struct CsvOptions {
    bool impute_mean = false;  // mean-impute missing feature cells
};

// Reads a comma-delimited, headered CSV against the schema. Columns are
// matched by name in any order; unknown columns are ignored. The target
// column, when present, is captured as raw values and additionally
// interpreted as class labels when it is integer-valued and covers a
// contiguous range 1..K (K >= 2).
inline Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                        const CsvOptions& opts = {}) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw ParseError("empty file: " + path);
    const auto headers = csv_detail::split_line(header_line);

    const int m = schema.n_features();
    std::vector<int> col_of_feature(static_cast<std::size_t>(m), -1);
    int target_col = -1;
    for (std::size_t c = 0; c < headers.size(); ++c) {
        const std::string name = csv_detail::trim(headers[c]);
        const int f = schema.find(name);
        if (f >= 0) col_of_feature[static_cast<std::size_t>(f)] = static_cast<int>(c);
        if (name == schema.target_name) target_col = static_cast<int>(c);
    }
    for (int f = 0; f < m; ++f)
        if (col_of_feature[static_cast<std::size_t>(f)] < 0)
            throw SchemaError("missing schema column \"" + schema.features[static_cast<std::size_t>(f)].name +
                              "\" in " + path);

    struct Cell {
        double value = 0.0;
        bool missing = false;
    };
    std::vector<std::vector<Cell>> feature_cells(static_cast<std::size_t>(m));
    std::vector<double> target_values;

    auto parse_cell = [](const std::string& tok, int data_row, const std::string& col_name,
                         bool allow_missing) -> Cell {
        const std::string t = csv_detail::trim(tok);
        if (t.empty()) {
            if (!allow_missing)
                throw ParseError("missing value at (row " + std::to_string(data_row) + ", \"" +
                                 col_name + "\"); rerun with --impute-mean to fill feature cells");
            return {0.0, true};
        }
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size() || !std::isfinite(v))
            throw ParseError("non-numeric cell \"" + t + "\" at (row " + std::to_string(data_row) +
                             ", \"" + col_name + "\")");
        return {v, false};
    };

    std::string line;
    int data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++data_row;
        const auto toks = csv_detail::split_line(line);
        if (toks.size() != headers.size())
            throw ParseError("row " + std::to_string(data_row) + " has " +
                             std::to_string(toks.size()) + " cells, header has " +
                             std::to_string(headers.size()));
        for (int f = 0; f < m; ++f) {
            const auto& spec = schema.features[static_cast<std::size_t>(f)];
            Cell cell = parse_cell(toks[static_cast<std::size_t>(col_of_feature[static_cast<std::size_t>(f)])],
                                   data_row, spec.name, opts.impute_mean);
            if (!cell.missing) {
                if (spec.kind == FeatureKind::Fraction && (cell.value < 0.0 || cell.value > 1.0))
                    throw RangeError("fraction value " + csv_detail::format_double(cell.value) +
                                     " outside [0,1] at (row " + std::to_string(data_row) + ", \"" +
                                     spec.name + "\")");
                if (spec.kind != FeatureKind::Fraction && cell.value < 0.0)
                    throw RangeError("negative value at (row " + std::to_string(data_row) + ", \"" +
                                     spec.name + "\")");
            }
            feature_cells[static_cast<std::size_t>(f)].push_back(cell);
        }
        if (target_col >= 0) {
            const Cell cell = parse_cell(toks[static_cast<std::size_t>(target_col)], data_row,
                                         schema.target_name, /*allow_missing=*/false);
            target_values.push_back(cell.value);
        }
    }
    if (data_row == 0) throw ParseError("no data rows in " + path);

    // Mean-impute per feature column.
    for (int f = 0; f < m; ++f) {
        auto& cells = feature_cells[static_cast<std::size_t>(f)];
        double sum = 0.0;
        int seen = 0;
        for (const Cell& c : cells)
            if (!c.missing) {
                sum += c.value;
                ++seen;
            }
        for (Cell& c : cells)
            if (c.missing) {
                if (seen == 0)
                    throw ParseError("column \"" + schema.features[static_cast<std::size_t>(f)].name +
                                     "\" has no observed values to impute from");
                c.value = sum / static_cast<double>(seen);
            }
    }

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(data_row) * static_cast<std::size_t>(m));
    for (int i = 0; i < data_row; ++i)
        for (int f = 0; f < m; ++f)
            values.push_back(feature_cells[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)].value);

    Dataset ds(schema, std::move(values));
    if (target_col >= 0) {
        ds.set_target(target_values);
        // Integer-valued contiguous 1..K targets double as labels.
        bool integral = true;
        int max_label = 0;
        for (double v : target_values) {
            if (v != std::floor(v) || v < 1.0 || v > 1e6) {
                integral = false;
                break;
            }
            max_label = std::max(max_label, static_cast<int>(v));
        }
        if (integral && max_label >= 2) {
            std::vector<char> present(static_cast<std::size_t>(max_label), 0);
            std::vector<int> labels;
            labels.reserve(target_values.size());
            for (double v : target_values) {
                const int y = static_cast<int>(v);
                present[static_cast<std::size_t>(y - 1)] = 1;
                labels.push_back(y);
            }
            bool contiguous = true;
            for (char p : present)
                if (!p) contiguous = false;
            if (contiguous) ds.set_labels(std::move(labels), max_label);
        }
    }
    return ds;
}

// Features in schema order plus the target column (raw target when present,
// otherwise labels). load_csv(write_csv(ds)) is bit-exact.
inline std::string csv_to_string(const Dataset& ds) {
    std::ostringstream out;
    const auto& schema = ds.schema();
    for (int f = 0; f < schema.n_features(); ++f) {
        if (f) out << ',';
        out << schema.features[static_cast<std::size_t>(f)].name;
    }
    const bool with_target = ds.has_target() || ds.has_labels();
    if (with_target) out << ',' << schema.target_name;
    out << '\n';

    for (int i = 0; i < ds.n_rows(); ++i) {
        for (int f = 0; f < schema.n_features(); ++f) {
            if (f) out << ',';
            out << csv_detail::format_double(ds.at(i, f));
        }
        if (with_target) {
            out << ',';
            if (ds.has_target())
                out << csv_detail::format_double(ds.target()[static_cast<std::size_t>(i)]);
            else
                out << ds.label(i);
        }
        out << '\n';
    }
    return out.str();
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ParseError("cannot write file: " + path);
    file << csv_to_string(ds);
}

}  // namespace tabml
