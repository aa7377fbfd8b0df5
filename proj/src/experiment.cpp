// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "topi/errors.hpp"
#include "topi/metrics.hpp"
#include "topi/serialize.hpp"

namespace topi {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_keys(const ordered_json& j, const char* where,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw config_error(std::string(where) + ": unknown key \"" + it.key() + "\"");
        }
    }
}

template <typename T>
void read_into(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path);
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::string artifact_path(const std::string& out_dir, const std::string& name) {
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / name).string();
}

Matrix draw_noise(const ModelConfig& cfg, std::uint64_t seed) {
    return seeded_fill(cfg.n_noisy, cfg.d_model(), seed, FillDist::gaussian(1.0));
}

Matrix draw_reference(const ModelConfig& cfg, std::uint64_t seed) {
    return seeded_fill(cfg.n_ref, cfg.d_model(), seed, FillDist::gaussian(1.0));
}

// Layers for a pruned run: a pinned artifact when configured, fresh
// calibration otherwise (which also leaves calibration.json behind).
RepresentativeLayers resolve_layers(const ExperimentConfig& cfg) {
    if (!cfg.calibration.layers_file.empty()) {
        return layers_from_calibration_json(read_file(cfg.calibration.layers_file),
                                            model_fingerprint(cfg.model));
    }
    return cmd_calibrate(cfg).layers;
}

std::string joined_layers(const RepresentativeLayers& layers) {
    std::string out;
    for (std::size_t i = 0; i < layers.layers.size(); ++i) {
        if (i > 0) {
            out += " ";
        }
        out += std::to_string(layers.layers[i]);
    }
    return out;
}

struct CellResult {
    TrajectoryRecord record;
    PrunerPolicy policy;
    std::string trajectory_path;
};

CellResult run_cell(const ExperimentConfig& cfg, const ToyDiT& model, const Matrix& noise,
                    const Matrix& reference, const PrunerPolicy& policy,
                    const std::string& label) {
    CellResult cell;
    cell.policy = policy;
    cell.record = run_trajectory(model, noise, reference, policy, cfg.run.observe);
    cell.trajectory_path = artifact_path(cfg.out_dir, "trajectory_" + label + ".json");
    write_file(cell.trajectory_path,
               trajectory_to_json(cell.record, label, &policy, model_fingerprint(cfg.model),
                                  cfg.run.noise_seed, cfg.run.ref_seed));
    return cell;
}

AblationRow row_for(const std::string& cell, const CellResult& result,
                    const Matrix& full_latent) {
    AblationRow row;
    row.cell = cell;
    row.tau = result.policy.tau;
    row.schedule = result.policy.schedule.anchors.size() == 1 &&
                           result.policy.schedule.interval ==
                               result.policy.schedule.anchors.front()
                       ? "static"
                       : "dynamic";
    row.metric = score_metric_name(result.policy.metric);
    row.reduction = reduction_kind_name(result.policy.reduction);
    row.layers = joined_layers(result.policy.layers);
    row.anchors = result.policy.schedule.anchors.size();
    row.k_sel_first = result.record.mask_history.front().kept.size();
    row.k_sel_last = result.record.mask_history.back().kept.size();
    row.gather_rows = result.record.counters.gather_rows;
    row.quality = compare_latents(full_latent, result.record.final_latent);
    return row;
}

ExperimentConfig parse_experiment_config_checked(const ordered_json& j);

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return parse_experiment_config_checked(j);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed config value: ") + e.what());
    }
}

namespace {

ExperimentConfig parse_experiment_config_checked(const ordered_json& j) {
    check_keys(j, "config",
               {"schema_version", "model", "policy", "calibration", "run", "out_dir"});
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
        throw config_error("unsupported config schema_version");
    }

    ExperimentConfig cfg;
    if (j.contains("model")) {
        const ordered_json& m = j.at("model");
        check_keys(m, "model",
                   {"depth_double", "depth_single", "heads", "head_dim", "ffn_mult", "n_noisy",
                    "n_ref", "n_prompt", "steps", "seed"});
        read_into(m, "depth_double", cfg.model.depth_double);
        read_into(m, "depth_single", cfg.model.depth_single);
        read_into(m, "heads", cfg.model.heads);
        read_into(m, "head_dim", cfg.model.head_dim);
        read_into(m, "ffn_mult", cfg.model.ffn_mult);
        read_into(m, "n_noisy", cfg.model.n_noisy);
        read_into(m, "n_ref", cfg.model.n_ref);
        read_into(m, "n_prompt", cfg.model.n_prompt);
        read_into(m, "steps", cfg.model.steps);
        read_into(m, "seed", cfg.model.seed);
    }
    if (j.contains("policy")) {
        const ordered_json& p = j.at("policy");
        check_keys(p, "policy",
                   {"tau", "interval", "schedule", "metric", "reduction", "k_exempt",
                    "baseline_seed"});
        read_into(p, "tau", cfg.policy.tau);
        read_into(p, "interval", cfg.policy.interval);
        if (p.contains("schedule")) {
            const std::string schedule = p.at("schedule").get<std::string>();
            if (schedule == "dynamic") {
                cfg.policy.dynamic_schedule = true;
            } else if (schedule == "static") {
                cfg.policy.dynamic_schedule = false;
            } else {
                throw config_error("policy.schedule must be \"dynamic\" or \"static\"");
            }
        }
        if (p.contains("metric")) {
            cfg.policy.metric = score_metric_from_name(p.at("metric").get<std::string>());
        }
        if (p.contains("reduction")) {
            cfg.policy.reduction = reduction_kind_from_name(p.at("reduction").get<std::string>());
        }
        if (p.contains("k_exempt")) {
            cfg.policy.k_exempt = p.at("k_exempt").get<std::size_t>();
        }
        read_into(p, "baseline_seed", cfg.policy.baseline_seed);
    }
    if (j.contains("calibration")) {
        const ordered_json& c = j.at("calibration");
        check_keys(c, "calibration",
                   {"m", "strategy", "samples", "probe", "noise_seed_base", "ref_seed_base",
                    "strategy_seed", "layers_file"});
        read_into(c, "m", cfg.calibration.m);
        if (c.contains("strategy")) {
            cfg.calibration.strategy =
                layer_strategy_from_name(c.at("strategy").get<std::string>());
        }
        read_into(c, "samples", cfg.calibration.samples);
        read_into(c, "probe", cfg.calibration.probe_steps);
        read_into(c, "noise_seed_base", cfg.calibration.noise_seed_base);
        read_into(c, "ref_seed_base", cfg.calibration.ref_seed_base);
        read_into(c, "strategy_seed", cfg.calibration.strategy_seed);
        read_into(c, "layers_file", cfg.calibration.layers_file);
    }
    if (j.contains("run")) {
        const ordered_json& r = j.at("run");
        check_keys(r, "run", {"noise_seed", "ref_seed", "observe", "compare_full"});
        read_into(r, "noise_seed", cfg.run.noise_seed);
        read_into(r, "ref_seed", cfg.run.ref_seed);
        read_into(r, "observe", cfg.run.observe);
        read_into(r, "compare_full", cfg.run.compare_full);
    }
    read_into(j, "out_dir", cfg.out_dir);

    cfg.model.validate();
    if (!(cfg.policy.tau >= 0.0 && cfg.policy.tau <= 1.0)) {
        throw config_error("policy.tau must lie in [0, 1]");
    }
    if (cfg.policy.interval < 1) {
        throw config_error("policy.interval must be >= 1");
    }
    if (cfg.calibration.samples < 1) {
        throw config_error("calibration.samples must be >= 1");
    }
    return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

PrunerPolicy assemble_policy(const ExperimentConfig& cfg, const RepresentativeLayers& layers) {
    PrunerPolicy policy;
    policy.tau = cfg.policy.tau;
    policy.schedule = cfg.policy.dynamic_schedule
                          ? make_schedule(static_cast<int>(cfg.model.steps), cfg.policy.interval)
                          : make_static_schedule(static_cast<int>(cfg.model.steps));
    policy.layers = layers;
    policy.metric = cfg.policy.metric;
    policy.reduction = cfg.policy.reduction;
    policy.k_exempt = cfg.policy.k_exempt.value_or(cfg.model.depth_double / 2);
    policy.baseline_seed = cfg.policy.baseline_seed;
    policy.validate(cfg.model.total_layers());
    return policy;
}

CalibrateOutcome cmd_calibrate(const ExperimentConfig& cfg) {
    const ToyDiT model = build_model(cfg.model);

    std::vector<CalibSample> samples;
    samples.reserve(cfg.calibration.samples);
    for (std::size_t i = 0; i < cfg.calibration.samples; ++i) {
        CalibSample sample;
        sample.noise_seed = cfg.calibration.noise_seed_base + i;
        sample.reference = draw_reference(cfg.model, cfg.calibration.ref_seed_base + i);
        samples.push_back(std::move(sample));
    }

    CalibrateOutcome outcome;
    outcome.table = sensitivity_scores(model, samples, cfg.calibration.probe_steps);
    outcome.layers = select_layers(outcome.table, cfg.calibration.m, cfg.calibration.strategy,
                                   cfg.calibration.strategy_seed);
    outcome.artifact_path = artifact_path(cfg.out_dir, "calibration.json");
    write_file(outcome.artifact_path,
               calibration_to_json(outcome.table, outcome.layers, cfg.calibration.strategy,
                                   cfg.calibration.m));
    return outcome;
}

RunOutcome cmd_run(const ExperimentConfig& cfg, const std::string& mode) {
    const ToyDiT model = build_model(cfg.model);
    const Matrix noise = draw_noise(cfg.model, cfg.run.noise_seed);
    const Matrix reference = draw_reference(cfg.model, cfg.run.ref_seed);
    const std::uint64_t fingerprint = model_fingerprint(cfg.model);

    RunOutcome outcome;
    char line[160];

    if (mode == "full") {
        const TrajectoryRecord record =
            run_baseline(model, noise, reference, cfg.run.observe);
        const std::string path = artifact_path(cfg.out_dir, "trajectory_full.json");
        write_file(path, trajectory_to_json(record, "full", nullptr, fingerprint,
                                            cfg.run.noise_seed, cfg.run.ref_seed));
        outcome.artifacts.push_back(path);
        std::snprintf(line, sizeof line, "full run: %zu steps, context %zu tokens",
                      record.steps.size(), reference.rows);
        outcome.summary = line;
        return outcome;
    }

    if (mode == "pruned") {
        const RepresentativeLayers layers = resolve_layers(cfg);
        const PrunerPolicy policy = assemble_policy(cfg, layers);
        const CellResult cell = run_cell(cfg, model, noise, reference, policy, "pruned");
        outcome.artifacts.push_back(cell.trajectory_path);

        std::snprintf(line, sizeof line, "pruned run: %zu anchors, K_sel %zu -> %zu",
                      cell.record.mask_history.size(),
                      cell.record.mask_history.front().kept.size(),
                      cell.record.mask_history.back().kept.size());
        outcome.summary = line;

        if (cfg.run.compare_full) {
            const TrajectoryRecord full = run_baseline(model, noise, reference, cfg.run.observe);
            const std::string full_path = artifact_path(cfg.out_dir, "trajectory_full.json");
            write_file(full_path, trajectory_to_json(full, "full", nullptr, fingerprint,
                                                     cfg.run.noise_seed, cfg.run.ref_seed));
            outcome.artifacts.push_back(full_path);

            const QualityReport quality =
                compare_latents(full.final_latent, cell.record.final_latent);
            const std::string quality_path = artifact_path(cfg.out_dir, "quality_pruned.json");
            write_file(quality_path, quality_to_json(quality, "full", "pruned"));
            outcome.artifacts.push_back(quality_path);
            std::snprintf(line, sizeof line,
                          "pruned vs full: psnr %.2f dB, ssim %.4f, max|err| %.3g",
                          quality.psnr, quality.ssim, quality.max_abs_err);
            outcome.summary = line;
        }
        return outcome;
    }

    constexpr const char* kAblationPrefix = "ablation:";
    if (mode.rfind(kAblationPrefix, 0) != 0) {
        throw config_error("unknown run mode: " + mode +
                           " (expected full, pruned, or ablation:<grid>)");
    }
    const std::string grid = mode.substr(std::string(kAblationPrefix).size());

    // Every grid compares against one shared full-context run.
    const TrajectoryRecord full = run_baseline(model, noise, reference, cfg.run.observe);
    const std::string full_path = artifact_path(cfg.out_dir, "trajectory_full.json");
    write_file(full_path, trajectory_to_json(full, "full", nullptr, fingerprint,
                                             cfg.run.noise_seed, cfg.run.ref_seed));
    outcome.artifacts.push_back(full_path);

    std::vector<AblationRow> rows;
    if (grid == "tau") {
        const RepresentativeLayers layers = resolve_layers(cfg);
        for (double tau : {0.6, 0.7, 0.8, 0.85, 0.9, 1.0}) {
            ExperimentConfig cell_cfg = cfg;
            cell_cfg.policy.tau = tau;
            char label[32];
            std::snprintf(label, sizeof label, "tau_%.2f", tau);
            const CellResult cell = run_cell(cell_cfg, model, noise, reference,
                                             assemble_policy(cell_cfg, layers), label);
            outcome.artifacts.push_back(cell.trajectory_path);
            rows.push_back(row_for(label, cell, full.final_latent));
        }
    } else if (grid == "metric") {
        const RepresentativeLayers layers = resolve_layers(cfg);
        for (ScoreMetric metric : {ScoreMetric::influence, ScoreMetric::attn_only,
                                   ScoreMetric::similarity, ScoreMetric::random_drop}) {
            ExperimentConfig cell_cfg = cfg;
            cell_cfg.policy.metric = metric;
            const std::string label = std::string("metric_") + score_metric_name(metric);
            const CellResult cell = run_cell(cell_cfg, model, noise, reference,
                                             assemble_policy(cell_cfg, layers), label);
            outcome.artifacts.push_back(cell.trajectory_path);
            rows.push_back(row_for(label, cell, full.final_latent));
        }
    } else if (grid == "reduction") {
        const RepresentativeLayers layers = resolve_layers(cfg);
        for (ReductionKind reduction : {ReductionKind::prune, ReductionKind::merge}) {
            ExperimentConfig cell_cfg = cfg;
            cell_cfg.policy.reduction = reduction;
            const std::string label =
                std::string("reduction_") + reduction_kind_name(reduction);
            const CellResult cell = run_cell(cell_cfg, model, noise, reference,
                                             assemble_policy(cell_cfg, layers), label);
            outcome.artifacts.push_back(cell.trajectory_path);
            rows.push_back(row_for(label, cell, full.final_latent));
        }
    } else if (grid == "layers") {
        // strategy grid needs the sensitivity table, so always calibrate
        const CalibrateOutcome calibration = cmd_calibrate(cfg);
        outcome.artifacts.push_back(calibration.artifact_path);
        for (LayerStrategy strategy : {LayerStrategy::top_m, LayerStrategy::random,
                                       LayerStrategy::first, LayerStrategy::last,
                                       LayerStrategy::all}) {
            const RepresentativeLayers layers =
                select_layers(calibration.table, cfg.calibration.m, strategy,
                              cfg.calibration.strategy_seed);
            const std::string label = std::string("layers_") + layer_strategy_name(strategy);
            const CellResult cell =
                run_cell(cfg, model, noise, reference, assemble_policy(cfg, layers), label);
            outcome.artifacts.push_back(cell.trajectory_path);
            rows.push_back(row_for(label, cell, full.final_latent));
        }
    } else if (grid == "static" || grid == "dynamic") {
        ExperimentConfig cell_cfg = cfg;
        cell_cfg.policy.dynamic_schedule = grid == "dynamic";
        const RepresentativeLayers layers = resolve_layers(cell_cfg);
        const std::string label = "schedule_" + grid;
        const CellResult cell = run_cell(cell_cfg, model, noise, reference,
                                         assemble_policy(cell_cfg, layers), label);
        outcome.artifacts.push_back(cell.trajectory_path);
        rows.push_back(row_for(label, cell, full.final_latent));
    } else {
        throw config_error("unknown ablation grid: " + grid);
    }

    const std::string csv_path = artifact_path(cfg.out_dir, "ablation_" + grid + ".csv");
    write_file(csv_path, ablation_csv(rows));
    outcome.artifacts.push_back(csv_path);
    std::snprintf(line, sizeof line, "ablation %s: %zu cells vs shared full run", grid.c_str(),
                  rows.size());
    outcome.summary = line;
    return outcome;
}

FlopsOutcome cmd_flops(const FlopsOptions& options, const std::string& out_dir) {
    const FlopsReport report = layer_breakdown(options.cost, options.pruned_n_img);

    // Overhead context mirrors the full-scale setup the table describes: the
    // published representative-layer count, 24 heads, and an even split of
    // the image tokens between generation target and reference context.
    const std::uint64_t layer_count = load_reference_fixture("flux").layers.size();
    const std::uint64_t half = options.cost.n_img / 2 > 0 ? options.cost.n_img / 2 : 1;
    const OverheadFlops overhead =
        overhead_flops(layer_count, 24, half, half, options.interval);

    FlopsOutcome outcome;
    outcome.text = flops_to_text(report, overhead, options.interval);
    outcome.artifact_path = artifact_path(
        out_dir, std::string("flops_") + cost_variant_name(options.cost.variant) + ".json");
    write_file(outcome.artifact_path, flops_to_json(report, overhead, options.interval));
    return outcome;
}

ReportOutcome cmd_report(const std::string& trajectory_path, const std::string& out_dir) {
    const TrajectoryRecord record = trajectory_from_json(read_file(trajectory_path));
    const AttentionProfile profile = build_profile(record);

    ReportOutcome outcome;
    const std::string layers_path = artifact_path(out_dir, "profile_layers.csv");
    write_file(layers_path, profile_layer_csv(profile));
    outcome.artifacts.push_back(layers_path);
    const std::string steps_path = artifact_path(out_dir, "profile_steps.csv");
    write_file(steps_path, profile_step_csv(profile));
    outcome.artifacts.push_back(steps_path);
    const std::string tokens_path = artifact_path(out_dir, "profile_tokens.csv");
    write_file(tokens_path, profile_token_csv(profile));
    outcome.artifacts.push_back(tokens_path);
    return outcome;
}

}  // namespace topi
