#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mlpeval/data.hpp"
#include "mlpeval/error.hpp"
#include "mlpeval/metrics.hpp"
#include "mlpeval/network.hpp"
#include "mlpeval/random.hpp"
#include "mlpeval/training.hpp"

namespace mlpeval {

struct ExperimentConfig {
    std::vector<std::string> datasets;
    std::vector<std::size_t> hidden_sizes{60, 80, 100};
    std::size_t runs = 10;
    double ratio = 0.7;
    std::size_t epochs = 500;
    std::uint64_t master_seed = 0;
    double beta = 1.0;
    double eta = 0.3;
    double mu = 0.1;
    std::filesystem::path output_dir = "results";
};

inline void validate(const ExperimentConfig& config) {
    if (config.runs == 0) throw Error("runs must be at least 1");
    if (config.hidden_sizes.empty()) throw Error("hidden_sizes is empty");
    if (!(config.ratio > 0.0 && config.ratio < 1.0)) throw Error("ratio must lie in (0, 1)");
    if (config.epochs == 0) throw Error("epochs must be at least 1");
}

inline TrainConfig train_config(const ExperimentConfig& config, std::size_t n_hidden, std::uint64_t seed) {
    TrainConfig tc;
    tc.eta = config.eta;
    tc.mu = config.mu;
    tc.beta = config.beta;
    tc.n_hidden = n_hidden;
    tc.epochs = config.epochs;
    tc.seed = seed;
    return tc;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Seed of one run: each input is folded in through the splitmix64 finalizer,
///   h = mix(master); h = mix(h ^ fnv1a64(name)); h = mix(h ^ n_hidden); h = mix(h ^ run).
/// Depends on nothing but its arguments.
inline std::uint64_t derive_run_seed(std::uint64_t master_seed, std::string_view dataset_name,
                                     std::size_t n_hidden, std::size_t run_index) {
    std::uint64_t h = detail::splitmix64(master_seed);
    h = detail::splitmix64(h ^ detail::fnv1a64(dataset_name));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(n_hidden));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(run_index));
    return h;
}

/// Fresh split, fresh weights, training and evaluation on the held-out part.
/// Split, initialization and epoch shuffles all draw from one Rng(run_seed).
inline MetricsReport run_once(const Dataset& data, std::size_t n_hidden, std::uint64_t run_seed,
                              const ExperimentConfig& config) {
    Rng rng(run_seed);
    const auto parts = split(data, config.ratio, rng);
    const auto tc = train_config(config, n_hidden, run_seed);
    const auto outcome = train(data, parts.train_indices, tc, rng);
    return evaluate(outcome.net, data, parts.test_indices, outcome.mse_trace.back(), outcome.train_time_s,
                    config.beta, tc.c);
}

/// mean ± sample standard deviation, or Undefined.
struct AggregateCell {
    bool defined = false;
    double mean = 0.0;
    double std = 0.0;

    static AggregateCell undefined() { return {}; }
    static AggregateCell of(double mean, double std) { return {true, mean, std}; }

    friend bool operator==(const AggregateCell&, const AggregateCell&) = default;
};

using AggregateColumn = std::array<AggregateCell, all_measures.size()>;

inline AggregateCell aggregate_values(std::span<const MetricValue> values) {
    if (values.empty()) throw Error("aggregate: no values");
    double sum = 0.0;
    for (const auto& v : values) {
        if (!v.is_defined()) return AggregateCell::undefined();
        sum += v.value();
    }
    const double n = static_cast<double>(values.size());
    const double mean = sum / n;
    if (values.size() == 1) return AggregateCell::of(mean, 0.0);
    double ss = 0.0;
    for (const auto& v : values) ss += (v.value() - mean) * (v.value() - mean);
    return AggregateCell::of(mean, std::sqrt(ss / (n - 1.0)));
}

inline AggregateColumn aggregate(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw Error("aggregate: empty report list");
    AggregateColumn column;
    std::vector<MetricValue> values(reports.size());
    for (std::size_t m = 0; m < all_measures.size(); ++m) {
        for (std::size_t r = 0; r < reports.size(); ++r) {
            values[r] = measure_value(reports[r], all_measures[m].measure);
        }
        column[m] = aggregate_values(values);
    }
    return column;
}

/// Measures as rows, datasets as columns, for one hidden-layer size.
struct ResultsTable {
    struct Column {
        std::string name;
        std::string display_name;
        std::size_t runs = 0;
        AggregateColumn cells;

        friend bool operator==(const Column&, const Column&) = default;
    };

    std::size_t n_hidden = 0;
    std::vector<Column> columns;

    friend bool operator==(const ResultsTable&, const ResultsTable&) = default;
};

enum class TableFormat { text, csv, json };

namespace detail {

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

// Display width in code points, so "±" counts once.
inline std::size_t display_width(std::string_view s) {
    std::size_t w = 0;
    for (unsigned char ch : s) {
        if ((ch & 0xC0) != 0x80) ++w;
    }
    return w;
}

}  // namespace detail

inline std::string format_cell(const AggregateCell& cell) {
    if (!cell.defined) return std::string(undefined_marker);
    return detail::fixed4(cell.mean) + "±" + detail::fixed4(cell.std);
}

inline nlohmann::json table_to_json(const ResultsTable& table) {
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& col : table.columns) {
        nlohmann::json cells = nlohmann::json::object();
        for (std::size_t m = 0; m < all_measures.size(); ++m) {
            const auto& cell = col.cells[m];
            cells[std::string(all_measures[m].key)] =
                cell.defined ? nlohmann::json{{"mean", cell.mean}, {"std", cell.std}}
                             : nlohmann::json(std::string(undefined_marker));
        }
        columns.push_back({{"dataset", col.name},
                           {"display_name", col.display_name},
                           {"runs", col.runs},
                           {"cells", std::move(cells)}});
    }
    return {{"n_hidden", table.n_hidden}, {"columns", std::move(columns)}};
}

inline ResultsTable table_from_json(const nlohmann::json& j) {
    ResultsTable table;
    table.n_hidden = j.at("n_hidden").get<std::size_t>();
    for (const auto& jc : j.at("columns")) {
        ResultsTable::Column col;
        col.name = jc.at("dataset").get<std::string>();
        col.display_name = jc.at("display_name").get<std::string>();
        col.runs = jc.at("runs").get<std::size_t>();
        const auto& cells = jc.at("cells");
        for (std::size_t m = 0; m < all_measures.size(); ++m) {
            const auto key = std::string(all_measures[m].key);
            if (!cells.contains(key)) continue;  // time_train_s may be stripped
            const auto& c = cells.at(key);
            col.cells[m] = c.is_string() ? AggregateCell::undefined()
                                         : AggregateCell::of(c.at("mean").get<double>(), c.at("std").get<double>());
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

inline std::string render_table(const ResultsTable& table, TableFormat format) {
    std::ostringstream out;
    switch (format) {
        case TableFormat::text: {
            std::vector<std::vector<std::string>> grid;
            grid.push_back({"Measures"});
            for (const auto& col : table.columns) grid.back().push_back(col.display_name);
            for (std::size_t m = 0; m < all_measures.size(); ++m) {
                grid.push_back({std::string(all_measures[m].label)});
                for (const auto& col : table.columns) grid.back().push_back(format_cell(col.cells[m]));
            }
            std::vector<std::size_t> width(grid.front().size(), 0);
            for (const auto& row : grid) {
                for (std::size_t c = 0; c < row.size(); ++c) {
                    width[c] = std::max(width[c], detail::display_width(row[c]));
                }
            }
            out << "n_hidden = " << table.n_hidden << "\n";
            for (const auto& row : grid) {
                for (std::size_t c = 0; c < row.size(); ++c) {
                    out << (c == 0 ? "" : "  ") << row[c];
                    if (c + 1 < row.size()) out << std::string(width[c] - detail::display_width(row[c]), ' ');
                }
                out << "\n";
            }
            break;
        }
        case TableFormat::csv: {
            out << "n_hidden,measure";
            for (const auto& col : table.columns) {
                out << "," << detail::csv_field(col.display_name + " mean") << ","
                    << detail::csv_field(col.display_name + " std");
            }
            out << "\n";
            for (std::size_t m = 0; m < all_measures.size(); ++m) {
                out << table.n_hidden << "," << all_measures[m].label;
                for (const auto& col : table.columns) {
                    const auto& cell = col.cells[m];
                    if (cell.defined) {
                        out << "," << detail::shortest(cell.mean) << "," << detail::shortest(cell.std);
                    } else {
                        out << "," << undefined_marker << "," << undefined_marker;
                    }
                }
                out << "\n";
            }
            break;
        }
        case TableFormat::json:
            out << table_to_json(table).dump(2) << "\n";
            break;
    }
    return out.str();
}

/// Per-run reports of one (dataset, n_hidden) pair, as persisted on disk.
struct RunRecord {
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    MetricsReport report;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunFile {
    std::string dataset;
    std::string display_name;
    std::size_t n_hidden = 0;
    nlohmann::json config;
    std::vector<RunRecord> runs;
};

inline nlohmann::json config_echo(const ExperimentConfig& c) {
    return {{"runs", c.runs},     {"ratio", c.ratio},   {"epochs", c.epochs},
            {"master_seed", c.master_seed}, {"beta", c.beta}, {"eta", c.eta},
            {"mu", c.mu},         {"hidden_sizes", c.hidden_sizes}};
}

inline nlohmann::json run_file_to_json(const RunFile& f) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : f.runs) {
        runs.push_back({{"run_index", r.run_index}, {"seed", r.seed}, {"report", r.report}});
    }
    return {{"dataset", f.dataset},
            {"display_name", f.display_name},
            {"n_hidden", f.n_hidden},
            {"config", f.config},
            {"runs", std::move(runs)}};
}

inline RunFile run_file_from_json(const nlohmann::json& j) {
    RunFile f;
    f.dataset = j.at("dataset").get<std::string>();
    f.display_name = j.at("display_name").get<std::string>();
    f.n_hidden = j.at("n_hidden").get<std::size_t>();
    f.config = j.at("config");
    for (const auto& jr : j.at("runs")) {
        f.runs.push_back({jr.at("run_index").get<std::size_t>(), jr.at("seed").get<std::uint64_t>(),
                          jr.at("report").get<MetricsReport>()});
    }
    return f;
}

inline std::filesystem::path run_file_path(const std::filesystem::path& dir, std::string_view dataset,
                                           std::size_t n_hidden) {
    return dir / (std::string(dataset) + "_h" + std::to_string(n_hidden) + ".json");
}

inline void write_run_file(const std::filesystem::path& dir, const RunFile& f) {
    std::filesystem::create_directories(dir);
    const auto path = run_file_path(dir, f.dataset, f.n_hidden);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << run_file_to_json(f).dump(2) << "\n";
}

/// Reads every run file in `dir`, sorted by file name.
inline std::vector<RunFile> read_run_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("results directory not found: " + dir.string());
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<RunFile> files;
    for (const auto& p : paths) {
        try {
            files.push_back(run_file_from_json(nlohmann::json::parse(read_file(p))));
        } catch (const nlohmann::json::exception& e) {
            throw Error(p.string() + ": " + e.what());
        }
    }
    return files;
}

/// One table per hidden size, columns in canonical dataset order.
inline std::vector<ResultsTable> build_tables(const std::vector<RunFile>& files) {
    std::vector<ResultsTable> tables;
    for (const auto& f : files) {
        auto it = std::find_if(tables.begin(), tables.end(),
                               [&](const ResultsTable& t) { return t.n_hidden == f.n_hidden; });
        if (it == tables.end()) {
            tables.push_back({f.n_hidden, {}});
            it = std::prev(tables.end());
        }
        std::vector<MetricsReport> reports;
        for (const auto& r : f.runs) reports.push_back(r.report);
        it->columns.push_back({f.dataset, f.display_name, reports.size(), aggregate(reports)});
    }
    const auto rank = [](const std::string& name) {
        const auto& order = canonical_dataset_order();
        return std::find(order.begin(), order.end(), name) - order.begin();
    };
    for (auto& t : tables) {
        std::sort(t.columns.begin(), t.columns.end(), [&](const auto& a, const auto& b) {
            const auto ra = rank(a.name), rb = rank(b.name);
            return ra != rb ? ra < rb : a.name < b.name;
        });
    }
    std::sort(tables.begin(), tables.end(),
              [](const ResultsTable& a, const ResultsTable& b) { return a.n_hidden < b.n_hidden; });
    return tables;
}

struct LoadedDataset {
    Dataset data;
    std::string display_name;
};

/// Runs every (dataset, n_hidden, run) task on up to `jobs` threads. Results
/// are gathered by task index, so output does not depend on scheduling.
inline std::vector<RunFile> run_experiment(const ExperimentConfig& config, const std::vector<LoadedDataset>& datasets,
                                           std::size_t jobs = 1,
                                           const std::function<void(std::string_view)>& progress = {}) {
    validate(config);
    struct Task {
        std::size_t dataset;
        std::size_t hidden;
        std::size_t run;
    };
    std::vector<Task> tasks;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (std::size_t h = 0; h < config.hidden_sizes.size(); ++h) {
            for (std::size_t r = 0; r < config.runs; ++r) tasks.push_back({d, h, r});
        }
    }

    std::vector<RunRecord> results(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            const auto& ds = datasets[t.dataset];
            const auto n_hidden = config.hidden_sizes[t.hidden];
            try {
                const auto seed = derive_run_seed(config.master_seed, ds.data.name, n_hidden, t.run);
                results[i] = {t.run, seed, run_once(ds.data, n_hidden, seed, config)};
                if (progress) {
                    std::lock_guard lock(progress_mutex);
                    progress(ds.data.name + " n_hidden=" + std::to_string(n_hidden) + " run " +
                             std::to_string(t.run + 1) + "/" + std::to_string(config.runs));
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto n_threads = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
        for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<RunFile> files;
    std::size_t i = 0;
    for (const auto& ds : datasets) {
        for (auto n_hidden : config.hidden_sizes) {
            RunFile f{ds.data.name, ds.display_name, n_hidden, config_echo(config), {}};
            for (std::size_t r = 0; r < config.runs; ++r) f.runs.push_back(results[i++]);
            files.push_back(std::move(f));
        }
    }
    return files;
}

}  // namespace mlpeval
