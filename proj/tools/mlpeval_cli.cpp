// Command-line front end: run experiments, render reports, verify datasets.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mlpeval/mlpeval.hpp"

#ifndef MLPEVAL_DEFAULT_RECIPE_DIR
#define MLPEVAL_DEFAULT_RECIPE_DIR "data/recipes"
#endif
#ifndef MLPEVAL_DEFAULT_DATA_DIR
#define MLPEVAL_DEFAULT_DATA_DIR "data/raw"
#endif

namespace fs = std::filesystem;
using namespace mlpeval;

namespace {

// `key = value` lines become `--key value` arguments placed ahead of the real
// command line, so explicit flags win.
std::vector<std::string> config_file_args(const fs::path& path) {
    std::vector<std::string> args;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = std::string(detail::trim(line));
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) throw ParseError(path.string() + ": expected 'key = value'", line_no);
        auto key = std::string(detail::trim(std::string_view(trimmed).substr(0, eq)));
        const auto value = std::string(detail::trim(std::string_view(trimmed).substr(eq + 1)));
        for (auto& ch : key) {
            if (ch == '_') ch = '-';
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

std::vector<Recipe> select_recipes(const std::vector<Recipe>& all, const std::vector<std::string>& names) {
    if (names.empty() || (names.size() == 1 && names.front() == "all")) return all;
    std::vector<Recipe> out;
    for (const auto& name : names) {
        const auto it = std::find_if(all.begin(), all.end(), [&](const Recipe& r) { return r.spec.name == name; });
        if (it == all.end()) throw Error("unknown dataset '" + name + "'");
        out.push_back(*it);
    }
    return out;
}

int verify_datasets(const fs::path& recipe_dir, const fs::path& data_dir) {
    bool ok = true;
    std::cout << "dataset          n      d    m    status\n";
    for (const auto& recipe : load_recipes(recipe_dir)) {
        std::string name = recipe.spec.name;
        name.resize(std::max<std::size_t>(name.size(), 15), ' ');
        if (!fs::exists(data_dir / recipe.file)) {
            std::cout << name << "  -      -    -    MISSING (" << (data_dir / recipe.file).string() << ")\n";
            ok = false;
            continue;
        }
        try {
            const auto ds = load_dataset(recipe, data_dir);
            const bool match = (!recipe.expected_instances || *recipe.expected_instances == ds.n()) &&
                               (!recipe.expected_features || *recipe.expected_features == ds.d());
            char line[128];
            std::snprintf(line, sizeof line, "  %-6zu %-4zu %-4zu ", ds.n(), ds.d(), ds.m());
            std::cout << name << line;
            if (match) {
                std::cout << "OK\n";
            } else {
                std::cout << "MISMATCH (expected n=" << recipe.expected_instances.value_or(0)
                          << ", d=" << recipe.expected_features.value_or(0) << ")\n";
                ok = false;
            }
        } catch (const std::exception& e) {
            std::cout << name << "  ERROR: " << e.what() << "\n";
            ok = false;
        }
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                auto extra = config_file_args(args[i + 1]);
                args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                           args.begin() + static_cast<std::ptrdiff_t>(i + 2));
                // Insert right after the subcommand name.
                const auto at = args.empty() ? args.end() : args.begin() + 1;
                args.insert(at, extra.begin(), extra.end());
                break;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Single-hidden-layer MLP benchmark with micro/macro multiclass measures"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    ExperimentConfig config;
    std::string dataset_arg = "all";
    std::string data_dir = MLPEVAL_DEFAULT_DATA_DIR;
    std::string recipe_dir = MLPEVAL_DEFAULT_RECIPE_DIR;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string config_path;

    auto* run = app.add_subcommand("run", "train and evaluate, writing one JSON file per (dataset, n_hidden)");
    run->add_option("--dataset", dataset_arg, "dataset name, comma list, or 'all'");
    run->add_option("--hidden", config.hidden_sizes, "hidden-layer sizes")->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    run->add_option("--runs", config.runs, "independent runs per setting");
    run->add_option("--epochs", config.epochs, "training epochs per run");
    run->add_option("--seed", config.master_seed, "master seed");
    run->add_option("--ratio", config.ratio, "training fraction");
    run->add_option("--beta", config.beta, "F-score beta");
    run->add_option("--eta", config.eta, "learning rate");
    run->add_option("--mu", config.mu, "momentum factor");
    run->add_option("--data-dir", data_dir, "directory holding raw UCI files");
    run->add_option("--recipe-dir", recipe_dir, "directory holding *.recipe files");
    run->add_option("--out", config.output_dir, "output directory");
    run->add_option("--jobs", jobs, "worker threads");
    run->add_option("--config", config_path, "key = value file mirroring these flags");

    std::string in_dir;
    std::string format = "text";
    auto* report = app.add_subcommand("report", "aggregate run files into result tables");
    report->add_option("--in", in_dir, "directory written by 'run'")->required();
    report->add_option("--format", format, "text, csv or json")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    auto* datasets = app.add_subcommand("datasets", "dataset utilities");
    datasets->require_subcommand(1);
    auto* verify = datasets->add_subcommand("verify", "check instance/feature counts of every recipe");
    verify->add_option("--data-dir", data_dir, "directory holding raw UCI files");
    verify->add_option("--recipe-dir", recipe_dir, "directory holding *.recipe files");

    std::vector<const char*> cargs{argv[0]};
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) {
            std::vector<std::string> names;
            std::stringstream ss(dataset_arg);
            for (std::string name; std::getline(ss, name, ',');) {
                if (!name.empty()) names.push_back(name);
            }
            config.datasets = names;
            std::vector<LoadedDataset> loaded;
            for (const auto& recipe : select_recipes(load_recipes(recipe_dir), names)) {
                loaded.push_back({load_dataset(recipe, data_dir), recipe.display_name});
            }
            const auto files = run_experiment(config, loaded, jobs, [](std::string_view msg) {
                std::cerr << msg << "\n";
            });
            for (const auto& f : files) write_run_file(config.output_dir, f);
            std::cerr << "wrote " << files.size() << " result files to " << config.output_dir.string() << "\n";
            return 0;
        }
        if (*report) {
            const auto tables = build_tables(read_run_files(in_dir));
            if (format == "json") {
                nlohmann::json all = nlohmann::json::array();
                for (const auto& t : tables) all.push_back(table_to_json(t));
                std::cout << all.dump(2) << "\n";
            } else {
                const auto fmt = format == "csv" ? TableFormat::csv : TableFormat::text;
                for (std::size_t i = 0; i < tables.size(); ++i) {
                    if (i > 0) std::cout << "\n";
                    std::cout << render_table(tables[i], fmt);
                }
            }
            return 0;
        }
        if (*verify) {
            return verify_datasets(recipe_dir, data_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
