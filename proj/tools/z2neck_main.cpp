#include "z2neck/error.hpp"
#include "z2neck/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace {

constexpr int exit_criterion_failed = 1;
constexpr int exit_config_error = 2;

void print_criteria(const z2neck::ExperimentResult& r)
{
    for (const auto& c : r.criteria)
        std::printf("%s  %-36s value=%-14.6g %s target=%g tol=%g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    z2neck::to_string(c.comparison), c.target, c.tolerance);
    for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"z2neck: mode decay experiments on model manifolds with long necks"};
    app.require_subcommand(1);

    std::string run_path, validate_path, output;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", run_path, "config file of key = value lines")->required();
    run->add_option("-o,--output", output, "override the output directory");
    run->add_flag("-q,--quiet", quiet, "print only the verdict");
    auto* list = app.add_subcommand("list", "list the experiments");
    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", validate_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_config_error;
    }

    try {
        if (*list) {
            for (const auto& e : z2neck::experiment_list()) std::printf("%-20s %s\n", e.name.c_str(), e.summary.c_str());
            return 0;
        }
        if (*validate) {
            z2neck::ExperimentConfig cfg = z2neck::load_config(validate_path);
            std::printf("%s: ok (%s)\n", validate_path.c_str(), cfg.experiment.c_str());
            return 0;
        }
        z2neck::ExperimentConfig cfg = z2neck::load_config(run_path);
        if (!output.empty()) cfg.output = output;
        auto t0 = std::chrono::steady_clock::now();
        z2neck::ExperimentResult r = z2neck::run_experiment(cfg);
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        z2neck::write_result(r, cfg);
        if (!quiet) print_criteria(r);
        std::printf("%s: %s in %.1f s, wrote %s/%s.{csv,json}\n", r.name.c_str(), r.passed() ? "passed" : "FAILED",
                    seconds, cfg.output.c_str(), r.name.c_str());
        return r.passed() ? 0 : exit_criterion_failed;
    } catch (const z2neck::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
}
