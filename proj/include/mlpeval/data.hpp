#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mlpeval/error.hpp"
#include "mlpeval/matrix.hpp"
#include "mlpeval/random.hpp"

namespace mlpeval {

enum class Delimiter { comma, whitespace };

enum class MissingPolicy { impute_column_mean };

/// How one raw UCI file is turned into a Dataset.
struct DatasetSpec {
    std::string name;
    Delimiter delimiter = Delimiter::comma;
    std::vector<std::size_t> drop_columns;
    std::size_t target_column = 0;
    std::vector<std::size_t> categorical_columns;
    std::optional<std::string> missing_token;
    MissingPolicy missing_policy = MissingPolicy::impute_column_mean;
};

/// A versioned recipe file: the DatasetSpec plus where to find the raw file
/// and the instance/feature counts the loaded data must reproduce.
struct Recipe {
    DatasetSpec spec;
    std::string display_name;
    std::string file;
    std::optional<std::size_t> expected_instances;
    std::optional<std::size_t> expected_features;
};

/// Normalized features in [0,1] and dense class labels.
struct Dataset {
    std::string name;
    Matrix features;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;

    std::size_t n() const noexcept { return features.rows(); }
    std::size_t d() const noexcept { return features.cols(); }
    std::size_t m() const noexcept { return class_names.size(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitPair {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    friend bool operator==(const SplitPair&, const SplitPair&) = default;
};

/// Datasets in the column order of the published result tables.
inline const std::vector<std::string>& canonical_dataset_order() {
    static const std::vector<std::string> order{"abalone", "breast_cancer", "ecoli", "glass",
                                                "ilpd",    "iris",          "wine"};
    return order;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, Delimiter delim) {
    std::vector<std::string_view> out;
    if (delim == Delimiter::comma) {
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(',', start);
            out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
    } else {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
            if (i >= line.size()) break;
            const auto start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

inline std::optional<double> parse_real(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

inline std::vector<std::size_t> parse_index_list(std::string_view value, std::size_t line) {
    std::vector<std::size_t> out;
    for (auto field : split_fields(value, Delimiter::comma)) {
        if (field.empty()) continue;
        std::size_t idx = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), idx);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw ParseError("bad column index '" + std::string(field) + "'", line);
        }
        out.push_back(idx);
    }
    return out;
}

inline bool contains(const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace detail

inline void validate(const DatasetSpec& spec) {
    if (spec.name.empty()) {
        throw Error("dataset spec has no name");
    }
    if (detail::contains(spec.drop_columns, spec.target_column)) {
        throw Error("target column " + std::to_string(spec.target_column) + " is also dropped");
    }
    if (detail::contains(spec.categorical_columns, spec.target_column)) {
        throw Error("target column cannot be categorical-coded as a feature");
    }
}

/// Parses `key = value` recipe text. Values may be wrapped in double quotes,
/// which is how an empty missing-value token is written.
inline Recipe parse_recipe(std::string_view text) {
    Recipe recipe;
    bool have_target = false;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected 'key = value'", line_no);
        }
        const auto key = detail::trim(line.substr(0, eq));
        auto value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        const auto count = [&](std::string_view v) {
            auto list = detail::parse_index_list(v, line_no);
            if (list.size() != 1) throw ParseError("expected a single integer", line_no);
            return list.front();
        };
        if (key == "name") {
            recipe.spec.name = value;
        } else if (key == "display_name") {
            recipe.display_name = value;
        } else if (key == "file") {
            recipe.file = value;
        } else if (key == "delimiter") {
            if (value == "comma") {
                recipe.spec.delimiter = Delimiter::comma;
            } else if (value == "whitespace") {
                recipe.spec.delimiter = Delimiter::whitespace;
            } else {
                throw ParseError("unknown delimiter '" + std::string(value) + "'", line_no);
            }
        } else if (key == "drop_columns") {
            recipe.spec.drop_columns = detail::parse_index_list(value, line_no);
        } else if (key == "target_column") {
            recipe.spec.target_column = count(value);
            have_target = true;
        } else if (key == "categorical_columns") {
            recipe.spec.categorical_columns = detail::parse_index_list(value, line_no);
        } else if (key == "missing_token") {
            recipe.spec.missing_token = std::string(value);
        } else if (key == "missing_policy") {
            if (value != "impute-column-mean") {
                throw ParseError("unsupported missing_policy '" + std::string(value) + "'", line_no);
            }
            recipe.spec.missing_policy = MissingPolicy::impute_column_mean;
        } else if (key == "expected_instances") {
            recipe.expected_instances = count(value);
        } else if (key == "expected_features") {
            recipe.expected_features = count(value);
        } else {
            throw ParseError("unknown recipe key '" + std::string(key) + "'", line_no);
        }
    }
    if (!have_target) {
        throw Error("recipe '" + recipe.spec.name + "' has no target_column");
    }
    if (recipe.display_name.empty()) recipe.display_name = recipe.spec.name;
    validate(recipe.spec);
    return recipe;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Loads every `*.recipe` in a directory, ordered like the result tables.
inline std::vector<Recipe> load_recipes(const std::filesystem::path& dir) {
    std::vector<Recipe> out;
    if (!std::filesystem::is_directory(dir)) {
        throw Error("recipe directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".recipe") {
            out.push_back(parse_recipe(read_file(entry.path())));
        }
    }
    const auto rank = [](const std::string& name) {
        const auto& order = canonical_dataset_order();
        return std::find(order.begin(), order.end(), name) - order.begin();
    };
    std::sort(out.begin(), out.end(), [&](const Recipe& a, const Recipe& b) {
        const auto ra = rank(a.spec.name), rb = rank(b.spec.name);
        return ra != rb ? ra < rb : a.spec.name < b.spec.name;
    });
    return out;
}

/// Per-column min-max scaling to [0,1]; a constant column maps to 0.5.
inline Matrix normalize_columns(const Matrix& raw) {
    for (double v : raw.values()) {
        if (!std::isfinite(v)) throw Error("normalize_columns: non-finite input");
    }
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t j = 0; j < raw.cols(); ++j) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            const double v = raw(i, j);
            if (i == 0 || v < lo) lo = v;
            if (i == 0 || v > hi) hi = v;
        }
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            out(i, j) = hi == lo ? 0.5 : (raw(i, j) - lo) / (hi - lo);
        }
    }
    return out;
}

inline Dataset load_dataset(const DatasetSpec& spec, std::string_view raw_file) {
    validate(spec);

    struct Row {
        std::size_t line;
        std::vector<std::string_view> fields;
    };
    std::vector<Row> rows;
    std::size_t line_no = 0;
    std::size_t arity = 0;
    std::size_t pos = 0;
    while (pos <= raw_file.size()) {
        auto end = raw_file.find('\n', pos);
        if (end == std::string_view::npos) end = raw_file.size();
        const auto line = raw_file.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_fields(line, spec.delimiter);
        if (rows.empty()) {
            arity = fields.size();
            if (spec.target_column >= arity) {
                throw ParseError("target column " + std::to_string(spec.target_column) +
                                     " out of range for " + std::to_string(arity) + " columns",
                                 line_no);
            }
            for (auto c : spec.drop_columns) {
                if (c >= arity) throw ParseError("dropped column out of range", line_no);
            }
            for (auto c : spec.categorical_columns) {
                if (c >= arity) throw ParseError("categorical column out of range", line_no);
            }
        } else if (fields.size() != arity) {
            throw ParseError("expected " + std::to_string(arity) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        rows.push_back({line_no, std::move(fields)});
    }
    if (rows.empty()) {
        throw Error("dataset '" + spec.name + "': empty file");
    }

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < arity; ++c) {
        if (c != spec.target_column && !detail::contains(spec.drop_columns, c)) {
            feature_cols.push_back(c);
        }
    }

    const auto is_missing = [&](std::string_view tok) {
        return spec.missing_token.has_value() && tok == *spec.missing_token;
    };

    const std::size_t n = rows.size();
    const std::size_t d = feature_cols.size();
    Matrix raw(n, d);
    std::vector<char> missing(n * d, 0);

    for (std::size_t j = 0; j < d; ++j) {
        const auto col = feature_cols[j];
        if (detail::contains(spec.categorical_columns, col)) {
            std::map<std::string_view, double> codes;
            for (const auto& r : rows) {
                if (!is_missing(r.fields[col])) codes.emplace(r.fields[col], 0.0);
            }
            double next = 0.0;
            for (auto& [_, code] : codes) code = next++;
            for (std::size_t i = 0; i < n; ++i) {
                const auto tok = rows[i].fields[col];
                if (is_missing(tok)) {
                    missing[i * d + j] = 1;
                } else {
                    raw(i, j) = codes.at(tok);
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const auto tok = rows[i].fields[col];
                if (is_missing(tok)) {
                    missing[i * d + j] = 1;
                    continue;
                }
                const auto v = detail::parse_real(tok);
                if (!v) {
                    throw ParseError("non-numeric value '" + std::string(tok) + "' in column " +
                                         std::to_string(col),
                                     rows[i].line);
                }
                raw(i, j) = *v;
            }
        }

        double sum = 0.0;
        std::size_t present = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!missing[i * d + j]) {
                sum += raw(i, j);
                ++present;
            }
        }
        if (present == 0) {
            throw Error("dataset '" + spec.name + "': column " + std::to_string(col) +
                        " has no values");
        }
        const double mean = sum / static_cast<double>(present);
        for (std::size_t i = 0; i < n; ++i) {
            if (missing[i * d + j]) raw(i, j) = mean;
        }
    }

    Dataset ds;
    ds.name = spec.name;
    ds.labels.reserve(n);
    std::map<std::string_view, std::size_t> class_index;
    for (const auto& r : rows) {
        const auto tok = r.fields[spec.target_column];
        if (tok.empty() || is_missing(tok)) {
            throw ParseError("missing class label", r.line);
        }
        const auto [it, inserted] = class_index.emplace(tok, ds.class_names.size());
        if (inserted) ds.class_names.emplace_back(tok);
        ds.labels.push_back(it->second);
    }
    ds.features = normalize_columns(raw);
    return ds;
}

inline Dataset load_dataset(const DatasetSpec& spec, std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return load_dataset(spec, std::string_view(text));
}

inline Dataset load_dataset(const Recipe& recipe, const std::filesystem::path& data_dir) {
    return load_dataset(recipe.spec, read_file(data_dir / recipe.file));
}

/// Random permutation of 0..n-1; the first floor(ratio*n) indices train.
inline SplitPair split(std::size_t n, double ratio, Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error("split ratio must lie in (0, 1)");
    }
    if (n < 2) {
        throw Error("split needs at least two instances");
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    // The epsilon keeps exact products such as 0.7 * 150 from flooring to 104.
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    SplitPair out;
    out.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return out;
}

inline SplitPair split(const Dataset& dataset, double ratio, Rng& rng) {
    return split(dataset.n(), ratio, rng);
}

}  // namespace mlpeval
