// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: calibrate layer sensitivity, run full/pruned/ablation
// trajectories, print the analytic cost tables, and rebuild profiles from
// stored trajectories. Exit codes: 0 success, 1 runtime failure, 2 bad
// configuration or usage.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "topi/errors.hpp"
#include "topi/experiment.hpp"

namespace {

// --out beats TOPI_OUT beats the config file's out_dir.
std::string resolve_out_dir(const std::string& cli_out, const std::string& config_out) {
    if (!cli_out.empty()) {
        return cli_out;
    }
    if (const char* env = std::getenv("TOPI_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return config_out.empty() ? "out" : config_out;
}

topi::ExperimentConfig load_config_or_fail(const std::string& path) {
    if (path.empty()) {
        throw topi::config_error("this subcommand needs --config <file>");
    }
    return topi::load_experiment_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"token-pruning pipeline for the toy diffusion engine"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    app.add_option("--config", config_path, "experiment config file (JSON)");
    CLI::Option* seed_option =
        app.add_option("--seed", seed_override, "override model.seed from the config");
    app.add_option("--out", out_override, "output directory (beats TOPI_OUT and the config)");

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "profile layer sensitivity and pick anchor layers");

    CLI::App* run = app.add_subcommand("run", "run denoising trajectories and reports");
    std::string mode = "pruned";
    run->add_option("--mode", mode,
                    "full | pruned | ablation:{tau,metric,reduction,layers,static,dynamic}");

    CLI::App* flops = app.add_subcommand("flops", "print and store the analytic cost table");
    std::string variant = "flux_double";
    topi::FlopsOptions flops_options;
    flops->add_option("--variant", variant, "flux_double | flux_single | qwen_double");
    flops->add_option("--n-img", flops_options.cost.n_img, "baseline image token count");
    flops->add_option("--n-prompt", flops_options.cost.n_prompt, "prompt token count");
    flops->add_option("--d", flops_options.cost.d, "model width");
    flops->add_option("--pruned-n-img", flops_options.pruned_n_img,
                      "image token count after pruning");
    flops->add_option("--dt", flops_options.interval, "anchor interval for overhead amortization");

    CLI::App* report =
        app.add_subcommand("report", "rebuild attention profiles from a stored trajectory");
    std::string report_input;
    report->add_option("--input", report_input,
                       "trajectory artifact (default: <out>/trajectory_full.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (calibrate->parsed()) {
            topi::ExperimentConfig cfg = load_config_or_fail(config_path);
            if (seed_option->count() > 0) {
                cfg.model.seed = seed_override;
            }
            cfg.out_dir = resolve_out_dir(out_override, cfg.out_dir);
            const topi::CalibrateOutcome outcome = topi::cmd_calibrate(cfg);
            std::cout << "wrote " << outcome.artifact_path << "\n";
            std::cout << "selected layers:";
            for (int layer : outcome.layers.layers) {
                std::cout << " " << layer;
            }
            std::cout << "\n";
        } else if (run->parsed()) {
            topi::ExperimentConfig cfg = load_config_or_fail(config_path);
            if (seed_option->count() > 0) {
                cfg.model.seed = seed_override;
            }
            cfg.out_dir = resolve_out_dir(out_override, cfg.out_dir);
            const topi::RunOutcome outcome = topi::cmd_run(cfg, mode);
            for (const std::string& path : outcome.artifacts) {
                std::cout << "wrote " << path << "\n";
            }
            std::cout << outcome.summary << "\n";
        } else if (flops->parsed()) {
            flops_options.cost.variant = topi::cost_variant_from_name(variant);
            std::string config_out;
            if (!config_path.empty()) {
                config_out = topi::load_experiment_config(config_path).out_dir;
            }
            const std::string out_dir = resolve_out_dir(out_override, config_out);
            const topi::FlopsOutcome outcome = topi::cmd_flops(flops_options, out_dir);
            std::cout << outcome.text;
            std::cout << "wrote " << outcome.artifact_path << "\n";
        } else if (report->parsed()) {
            std::string config_out;
            if (!config_path.empty()) {
                config_out = topi::load_experiment_config(config_path).out_dir;
            }
            const std::string out_dir = resolve_out_dir(out_override, config_out);
            const std::string input =
                report_input.empty()
                    ? (std::filesystem::path(out_dir) / "trajectory_full.json").string()
                    : report_input;
            const topi::ReportOutcome outcome = topi::cmd_report(input, out_dir);
            for (const std::string& path : outcome.artifacts) {
                std::cout << "wrote " << path << "\n";
            }
        }
        return 0;
    } catch (const topi::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
