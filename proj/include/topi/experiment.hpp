// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topi/calibration.hpp"
#include "topi/engine.hpp"
#include "topi/flops.hpp"
#include "topi/pruning.hpp"

namespace topi {

// Scheduling and selection knobs as they appear in config files; the concrete
// PrunerPolicy is assembled per run against the model shape.
struct PolicySpec {
    double tau = 0.85;
    int interval = 10;
    bool dynamic_schedule = true;
    ScoreMetric metric = ScoreMetric::influence;
    ReductionKind reduction = ReductionKind::prune;
    std::optional<std::size_t> k_exempt;  // absent: depth_double / 2
    std::uint64_t baseline_seed = 0;
};

struct CalibrationSpec {
    std::size_t m = 3;
    LayerStrategy strategy = LayerStrategy::top_m;
    std::size_t samples = 2;
    std::vector<int> probe_steps;  // empty: default anchor cadence
    std::uint64_t noise_seed_base = 1000;
    std::uint64_t ref_seed_base = 2000;
    std::uint64_t strategy_seed = 0;
    std::string layers_file;  // nonempty: reuse this artifact, skip calibration
};

struct RunSpec {
    std::uint64_t noise_seed = 1;
    std::uint64_t ref_seed = 2;
    std::vector<int> observe;  // extra capture layers recorded into trajectories
    bool compare_full = true;
};

struct ExperimentConfig {
    ModelConfig model;
    PolicySpec policy;
    CalibrationSpec calibration;
    RunSpec run;
    std::string out_dir = "out";
};

// Strict parse: unknown keys anywhere are a config_error, so typos cannot
// silently fall back to defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

PrunerPolicy assemble_policy(const ExperimentConfig& cfg, const RepresentativeLayers& layers);

struct CalibrateOutcome {
    SensitivityTable table;
    RepresentativeLayers layers;
    std::string artifact_path;
};

// Synthesizes the calibration set, profiles layer sensitivity, selects the
// representative set, and writes <out_dir>/calibration.json.
CalibrateOutcome cmd_calibrate(const ExperimentConfig& cfg);

struct RunOutcome {
    std::vector<std::string> artifacts;
    std::string summary;  // human-readable closing line
};

// mode: "full", "pruned", or "ablation:<grid>" with grid one of
// tau | metric | reduction | layers | static | dynamic.
RunOutcome cmd_run(const ExperimentConfig& cfg, const std::string& mode);

struct FlopsOptions {
    CostConfig cost;
    std::uint64_t pruned_n_img = 6144;
    std::uint64_t interval = 10;
};

struct FlopsOutcome {
    std::string text;  // printable table
    std::string artifact_path;
};

FlopsOutcome cmd_flops(const FlopsOptions& options, const std::string& out_dir);

struct ReportOutcome {
    std::vector<std::string> artifacts;
};

// Rebuilds attention profiles from a stored trajectory artifact.
ReportOutcome cmd_report(const std::string& trajectory_path, const std::string& out_dir);

}  // namespace topi
