// srgp_bench: streaming GP experiments from a JSON config.
//
//   srgp_bench run --config configs/abalone_se.json [--set engine=BRMF] [--output out/x]
//   srgp_bench suite --config configs/table1_abalone.json
//   srgp_bench verify-bounds --seeds 100
//   srgp_bench fetch-data [--synthetic]
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <srgp/bench.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

using namespace srgp;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void print_row(const bench::SuiteRow& r) {
    std::printf("%-24s %-5s %-10s batches=%-4lld mean_rmse=%-12.6g mean_s=%-12.6g exponent=%.3f\n", r.name.c_str(),
                r.engine.c_str(), r.mode.c_str(), static_cast<long long>(r.batches), r.mean_rmse, r.mean_seconds,
                r.time_exponent);
}

bench::SuiteRow row_of(const bench::ExperimentResult& res) {
    bench::SuiteRow r;
    r.name = res.config.name;
    r.engine = gp::to_string(res.config.engine);
    r.mode = res.config.mode ? hyperopt::to_string(res.config.mode->kind) : "off";
    r.batches = static_cast<Index>(res.metrics.batches.size());
    r.mean_rmse = res.metrics.mean_rmse();
    r.mean_seconds = res.metrics.mean_seconds();
    r.total_seconds = res.metrics.total_seconds();
    r.time_exponent = bench::fit_exponent(res.metrics, r.batches / 2);
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming Gaussian-process experiments with sequential randomized eigendecompositions"};
    app.require_subcommand(1);

    std::string config_path, output;
    std::vector<std::string> overrides;
    int repeats = 0;

    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("-c,--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("-s,--set", overrides, "Override a config key, e.g. --set stream.batch_size=50");
    run->add_option("-o,--output", output, "Output directory (overrides the config)");
    run->add_option("-r,--repeats", repeats, "Repeat the run and report the median time per batch")
        ->check(CLI::PositiveNumber);

    auto* suite = app.add_subcommand("suite", "Run a comparison suite");
    suite->add_option("-c,--config", config_path, "JSON suite config")->required()->check(CLI::ExistingFile);
    suite->add_option("-s,--set", overrides, "Override a key of the suite base config");
    suite->add_option("-o,--output", output, "Output directory (overrides the suite)");

    bench::BoundsConfig bounds;
    double min_pass = 0.95;
    std::string bounds_out = "out/bounds";
    auto* verify = app.add_subcommand("verify-bounds", "Check the sequential error bound against a dense oracle");
    verify->add_option("--seeds", bounds.seeds, "Number of seeded runs")->capture_default_str();
    verify->add_option("--first-seed", bounds.first_seed)->capture_default_str();
    verify->add_option("--batches", bounds.batches)->capture_default_str();
    verify->add_option("--batch-size", bounds.batch_size)->capture_default_str();
    verify->add_option("--dims", bounds.dims)->capture_default_str();
    verify->add_option("-k", bounds.sketch.k, "Target rank")->capture_default_str();
    verify->add_option("-p", bounds.sketch.p, "Oversampling")->capture_default_str();
    verify->add_option("--lengthscale", bounds.lengthscale)->capture_default_str();
    verify->add_option("--min-pass", min_pass, "Required fraction of runs without a violation")->capture_default_str();
    verify->add_option("-o,--output", bounds_out)->capture_default_str();

    bool synthetic = false;
    std::string dest = "data";
    Index surrogate_rows = 0;
    auto* fetch = app.add_subcommand("fetch-data", "Download Abalone and SARCOS (or write offline surrogates)");
    fetch->add_flag("--synthetic", synthetic, "Write deterministic surrogates instead of downloading");
    fetch->add_option("--dest", dest)->capture_default_str();
    fetch->add_option("--rows", surrogate_rows, "Surrogate rows (default: the real dataset sizes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            bench::Json doc = bench::load_json(config_path);
            for (const auto& o : overrides) bench::apply_override(doc, o);
            if (!output.empty()) doc["output"] = output;
            if (repeats > 0) doc["repeats"] = repeats;
            const auto config = bench::parse_config(doc);
            const auto result = bench::run_experiment(config);
            bench::write_outputs(result, config.output_dir);
            print_row(row_of(result));
            std::printf("wrote %s\n", config.output_dir.c_str());
        } else if (*suite) {
            bench::Json doc = bench::load_json(config_path);
            for (const auto& o : overrides) {
                bench::Json& base = doc["base"];
                bench::apply_override(base, o);
            }
            if (!output.empty()) doc["output"] = output;
            const fs::path out = doc.value("output", std::string("out/suite"));
            if (!doc.contains("output")) doc["output"] = out.string();
            const auto configs = bench::expand_suite(doc);
            const auto result = bench::run_suite(configs);
            bench::write_suite(result, out);
            for (const auto& r : result.rows) print_row(r);
            std::printf("wrote %s\n", out.string().c_str());
        } else if (*verify) {
            const auto report = bench::verify_bounds(bounds);
            bench::write_bounds(report, bounds_out);
            std::printf("runs=%d violating=%d pass_fraction=%.3f max_error_over_bound=%.3g\n", report.runs,
                        report.violating_runs, report.pass_fraction(), report.max_ratio);
            if (report.pass_fraction() < min_pass) return kExitNumerical;
        } else if (*fetch) {
            if (synthetic) {
                fs::create_directories(dest);
                const fs::path abalone = fs::path(dest) / "abalone_surrogate.csv";
                const fs::path sarcos = fs::path(dest) / "sarcos_surrogate.csv";
                data::write_synthetic_abalone(abalone, surrogate_rows > 0 ? surrogate_rows : 4177, 0);
                data::write_synthetic_sarcos(sarcos, surrogate_rows > 0 ? surrogate_rows : 44484, 0);
                std::printf("wrote %s and %s\n", abalone.string().c_str(), sarcos.string().c_str());
            } else {
                const std::string cmd = "python3 scripts/fetch_data.py --dest \"" + dest + "\"";
                const int rc = std::system(cmd.c_str());
                if (rc != 0) {
                    std::fprintf(stderr, "fetch-data: download failed; use --synthetic for offline surrogates\n");
                    return kExitData;
                }
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
