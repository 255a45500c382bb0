// Command-line front end of the pipeline. One stage per invocation:
//
//   intentgraph --config pipeline.json [--seed N] <stage>
//
// The stage's deterministic report is printed to stdout and written under
// the configured reports directory; a timing wrapper goes to
// <runs>/<timestamp>-<config-hash>/<stage>.json. Failures print a JSON error
// record to stderr and exit with 2 (config), 3 (missing dependency),
// 4 (data), 5 (backend), 6 (training) or 7 (internal).

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "intentgraph/pipeline.hpp"

namespace {

std::string utc_stamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

int fail(const std::string& stage, const std::exception& e) {
    std::cerr << ig::error_report(stage, e).dump() << "\n";
    return ig::exit_code_for(e);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"intention-graph pipeline"};
    app.require_subcommand(1);
    std::string config_path = "pipeline.json";
    app.add_option("--config", config_path, "pipeline config file")->capture_default_str();
    uint64_t seed = 0;
    CLI::Option* seed_opt =
        app.add_option("--seed", seed, "override every stage seed in the config");
    for (const std::string& name : ig::stage_names()) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << ig::error_report("cli", ig::ConfigError(e.what())).dump() << "\n";
        return 2;
    }
    const std::string stage = app.get_subcommands().front()->get_name();

    try {
        ig::PipelineConfig cfg = ig::load_pipeline_config(config_path);
        if (*seed_opt) ig::override_seeds(cfg, seed);

        const std::string stamp = utc_stamp();
        auto t0 = std::chrono::steady_clock::now();
        nlohmann::ordered_json report = ig::run_stage(cfg, stage);
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count();

        std::filesystem::path run_dir =
            cfg.runs / (stamp + "-" + cfg.config_hash.substr(0, 8));
        std::filesystem::create_directories(run_dir);
        nlohmann::ordered_json run_record = {{"stage", stage},
                                             {"config", cfg.config_hash},
                                             {"started_utc", stamp},
                                             {"duration_seconds", seconds},
                                             {"report", report}};
        std::ofstream run_out(run_dir / (stage + ".json"), std::ios::binary);
        run_out << run_record.dump(2) << "\n";

        std::cout << report.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        return fail(stage, e);
    }
}
