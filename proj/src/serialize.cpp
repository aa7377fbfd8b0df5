// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "topi/errors.hpp"

namespace topi {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fp);
    return buf;
}

std::uint64_t fingerprint_from_hex(const std::string& hex) {
    if (hex.size() != 16) {
        throw config_error("malformed model_fingerprint: " + hex);
    }
    return std::stoull(hex, nullptr, 16);
}

// %.17g survives a decimal round trip for any finite double.
std::string csv_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ordered_json matrix_to_json(const Matrix& m) {
    ordered_json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.data;
    return j;
}

Matrix matrix_from_json(const ordered_json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.rows * m.cols) {
        throw config_error("matrix data length disagrees with its shape");
    }
    m.data = data;
    return m;
}

void require_kind(const ordered_json& j, const char* kind) {
    if (j.value("schema_version", -1) != kSchemaVersion) {
        throw config_error(std::string("unsupported schema_version in ") + kind + " artifact");
    }
    if (j.value("kind", "") != kind) {
        throw config_error(std::string("artifact is not a ") + kind + " record");
    }
}

TrajectoryRecord trajectory_from_parsed(const ordered_json& j) {
    TrajectoryRecord record;
    const ordered_json& counters = j.at("counters");
    record.counters.captures_materialized = counters.at("captures_materialized");
    record.counters.gather_ops = counters.at("gather_ops");
    record.counters.gather_rows = counters.at("gather_rows");
    record.counters.score_recomputations = counters.at("score_recomputations");

    for (const ordered_json& s : j.at("steps")) {
        StepRecord step;
        step.timestep = s.at("t");
        const std::string mode = s.at("mode").get<std::string>();
        if (mode.size() != 1) {
            throw config_error("trajectory step mode must be a single character");
        }
        step.mode = mode[0];
        step.retained = s.at("retained");
        for (const ordered_json& c : s.at("captures")) {
            StepCaptureSummary cap;
            cap.layer = c.at("layer");
            cap.total = c.at("total");
            cap.s_j = c.at("s_j").get<std::vector<double>>();
            step.captures.push_back(std::move(cap));
        }
        record.steps.push_back(std::move(step));
    }
    for (const ordered_json& m : j.at("mask_history")) {
        MaskEvent event;
        event.timestep = m.at("t");
        event.kept = m.at("kept").get<std::vector<std::size_t>>();
        record.mask_history.push_back(std::move(event));
    }
    for (const ordered_json& s : j.at("score_events")) {
        ScoreEvent event;
        event.timestep = s.at("t");
        event.metric = score_metric_from_name(s.at("metric").get<std::string>());
        event.values = s.at("values").get<std::vector<double>>();
        record.score_events.push_back(std::move(event));
    }
    record.final_latent = matrix_from_json(j.at("final_latent"));
    return record;
}

}  // namespace

std::string calibration_to_json(const SensitivityTable& table, const RepresentativeLayers& layers,
                                LayerStrategy strategy, std::size_t m) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "calibration";
    j["model_fingerprint"] = fingerprint_hex(table.model_fingerprint);
    j["sample_count"] = table.sample_count;
    j["strategy"] = layer_strategy_name(strategy);
    j["m"] = m;
    j["layer_scores"] = table.layer_scores;
    j["layers"] = layers.layers;
    return j.dump(2) + "\n";
}

RepresentativeLayers layers_from_calibration_json(const std::string& text,
                                                  std::uint64_t expect_fingerprint) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("calibration artifact is not valid JSON: ") + e.what());
    }
    try {
        require_kind(j, "calibration");
        if (expect_fingerprint != 0) {
            const std::uint64_t stored =
                fingerprint_from_hex(j.at("model_fingerprint").get<std::string>());
            if (stored != expect_fingerprint) {
                throw config_error(
                    "calibration artifact was produced by a different model config");
            }
        }
        RepresentativeLayers out;
        out.layers = j.at("layers").get<std::vector<int>>();
        if (out.layers.empty()) {
            throw config_error("calibration artifact holds an empty layer set");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed calibration artifact: ") + e.what());
    }
}

std::string trajectory_to_json(const TrajectoryRecord& record, const std::string& label,
                               const PrunerPolicy* policy, std::uint64_t fingerprint,
                               std::uint64_t noise_seed, std::uint64_t ref_seed) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "trajectory";
    j["label"] = label;
    j["model_fingerprint"] = fingerprint_hex(fingerprint);
    j["noise_seed"] = noise_seed;
    j["ref_seed"] = ref_seed;

    if (policy != nullptr) {
        ordered_json p;
        p["tau"] = policy->tau;
        p["anchors"] = policy->schedule.anchors;
        p["interval"] = policy->schedule.interval;
        p["metric"] = score_metric_name(policy->metric);
        p["reduction"] = reduction_kind_name(policy->reduction);
        p["k_exempt"] = policy->k_exempt;
        p["layers"] = policy->layers.layers;
        p["baseline_seed"] = policy->baseline_seed;
        j["policy"] = p;
    } else {
        j["policy"] = nullptr;
    }

    ordered_json counters;
    counters["captures_materialized"] = record.counters.captures_materialized;
    counters["gather_ops"] = record.counters.gather_ops;
    counters["gather_rows"] = record.counters.gather_rows;
    counters["score_recomputations"] = record.counters.score_recomputations;
    j["counters"] = counters;

    ordered_json steps = ordered_json::array();
    for (const StepRecord& step : record.steps) {
        ordered_json s;
        s["t"] = step.timestep;
        s["mode"] = std::string(1, step.mode);
        s["retained"] = step.retained;
        ordered_json caps = ordered_json::array();
        for (const StepCaptureSummary& cap : step.captures) {
            ordered_json c;
            c["layer"] = cap.layer;
            c["total"] = cap.total;
            c["s_j"] = cap.s_j;
            caps.push_back(std::move(c));
        }
        s["captures"] = std::move(caps);
        steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);

    ordered_json masks = ordered_json::array();
    for (const MaskEvent& event : record.mask_history) {
        ordered_json m;
        m["t"] = event.timestep;
        m["kept"] = event.kept;
        masks.push_back(std::move(m));
    }
    j["mask_history"] = std::move(masks);

    ordered_json scores = ordered_json::array();
    for (const ScoreEvent& event : record.score_events) {
        ordered_json s;
        s["t"] = event.timestep;
        s["metric"] = score_metric_name(event.metric);
        s["values"] = event.values;
        scores.push_back(std::move(s));
    }
    j["score_events"] = std::move(scores);

    j["final_latent"] = matrix_to_json(record.final_latent);
    return j.dump(2) + "\n";
}

TrajectoryRecord trajectory_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("trajectory artifact is not valid JSON: ") + e.what());
    }
    require_kind(j, "trajectory");

    try {
        return trajectory_from_parsed(j);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed trajectory artifact: ") + e.what());
    }
}

std::string quality_to_json(const QualityReport& report, const std::string& baseline_label,
                            const std::string& candidate_label) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "quality";
    j["baseline"] = baseline_label;
    j["candidate"] = candidate_label;
    j["psnr"] = report.psnr;
    j["ssim"] = report.ssim;
    j["max_abs_err"] = report.max_abs_err;
    j["mean_abs_err"] = report.mean_abs_err;
    return j.dump(2) + "\n";
}

namespace {

std::string overhead_pct_of_layer(const OverheadFlops& overhead, std::uint64_t layer_baseline) {
    char buf[32];
    const double pct = layer_baseline == 0
                           ? 0.0
                           : 100.0 * overhead.amortized_per_step /
                                 static_cast<double>(layer_baseline);
    std::snprintf(buf, sizeof buf, "%.4f", pct);
    return buf;
}

}  // namespace

std::string flops_to_json(const FlopsReport& report, const OverheadFlops& overhead,
                          std::uint64_t interval) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "flops";
    j["variant"] = cost_variant_name(report.variant);
    j["n_img"] = report.n_img;
    j["pruned_n_img"] = report.pruned_n_img;
    j["n_prompt"] = report.n_prompt;
    j["d"] = report.d;

    ordered_json components = ordered_json::array();
    for (const FlopsComponent& c : report.components) {
        ordered_json e;
        e["name"] = c.name;
        e["baseline_flops"] = c.baseline;
        e["pruned_flops"] = c.pruned;
        e["baseline_gflops"] = format_gflops(c.baseline);
        e["pruned_gflops"] = format_gflops(c.pruned);
        e["reduction"] = format_reduction_pct(c.baseline, c.pruned);
        components.push_back(std::move(e));
    }
    j["components"] = std::move(components);

    ordered_json total;
    total["baseline_flops"] = report.total_baseline;
    total["pruned_flops"] = report.total_pruned;
    total["baseline_gflops"] = format_gflops(report.total_baseline);
    total["pruned_gflops"] = format_gflops(report.total_pruned);
    total["reduction"] = format_reduction_pct(report.total_baseline, report.total_pruned);
    j["total"] = std::move(total);

    ordered_json o;
    o["interval"] = interval;
    o["scoring_flops"] = overhead.scoring;
    o["selection_flops"] = overhead.selection;
    o["amortized_per_step"] = overhead.amortized_per_step;
    o["pct_of_layer"] = overhead_pct_of_layer(overhead, report.total_baseline);
    j["overhead"] = std::move(o);
    return j.dump(2) + "\n";
}

std::string flops_to_text(const FlopsReport& report, const OverheadFlops& overhead,
                          std::uint64_t interval) {
    char line[192];
    std::string out;
    std::snprintf(line, sizeof line, "variant: %s  (n_img %" PRIu64 " -> %" PRIu64
                                     ", n_prompt %" PRIu64 ", d %" PRIu64 ")\n",
                  cost_variant_name(report.variant), report.n_img, report.pruned_n_img,
                  report.n_prompt, report.d);
    out += line;
    std::snprintf(line, sizeof line, "%-14s %12s %12s %10s\n", "component", "baseline", "pruned",
                  "reduction");
    out += line;
    for (const FlopsComponent& c : report.components) {
        std::snprintf(line, sizeof line, "%-14s %12s %12s %9s%%\n", c.name.c_str(),
                      format_gflops(c.baseline).c_str(), format_gflops(c.pruned).c_str(),
                      format_reduction_pct(c.baseline, c.pruned).c_str());
        out += line;
    }
    std::snprintf(line, sizeof line, "%-14s %12s %12s %9s%%\n", "layer_total",
                  format_gflops(report.total_baseline).c_str(),
                  format_gflops(report.total_pruned).c_str(),
                  format_reduction_pct(report.total_baseline, report.total_pruned).c_str());
    out += line;
    std::snprintf(line, sizeof line,
                  "overhead(dt=%" PRIu64 "): scoring %" PRIu64 " + selection %" PRIu64
                  " flops, amortized %.1f/step (%s%% of layer)\n",
                  interval, overhead.scoring, overhead.selection, overhead.amortized_per_step,
                  overhead_pct_of_layer(overhead, report.total_baseline).c_str());
    out += line;
    return out;
}

std::string profile_layer_csv(const AttentionProfile& profile) {
    std::string out = "# schema_version=1\nlayer,mean_share\n";
    for (std::size_t i = 0; i < profile.layers.size(); ++i) {
        out += std::to_string(profile.layers[i]) + "," + csv_double(profile.layer_totals[i]) +
               "\n";
    }
    return out;
}

std::string profile_step_csv(const AttentionProfile& profile) {
    std::string out = "# schema_version=1\ntimestep,mean_share\n";
    for (std::size_t i = 0; i < profile.timesteps.size(); ++i) {
        out += std::to_string(profile.timesteps[i]) + "," + csv_double(profile.step_totals[i]) +
               "\n";
    }
    return out;
}

std::string profile_token_csv(const AttentionProfile& profile) {
    std::string out = "# schema_version=1\ntimestep,layer,token,s_j\n";
    for (const AttentionProfile::TokenSeriesRow& row : profile.token_series) {
        for (std::size_t j = 0; j < row.s_j.size(); ++j) {
            out += std::to_string(row.timestep) + "," + std::to_string(row.layer) + "," +
                   std::to_string(j) + "," + csv_double(row.s_j[j]) + "\n";
        }
    }
    return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out =
        "# schema_version=1\n"
        "cell,tau,schedule,metric,reduction,layers,anchors,k_sel_first,k_sel_last,"
        "gather_rows,psnr,ssim,max_abs_err,mean_abs_err\n";
    for (const AblationRow& r : rows) {
        out += r.cell + "," + csv_double(r.tau) + "," + r.schedule + "," + r.metric + "," +
               r.reduction + "," + r.layers + "," + std::to_string(r.anchors) + "," +
               std::to_string(r.k_sel_first) + "," + std::to_string(r.k_sel_last) + "," +
               std::to_string(r.gather_rows) + "," + csv_double(r.quality.psnr) + "," +
               csv_double(r.quality.ssim) + "," + csv_double(r.quality.max_abs_err) + "," +
               csv_double(r.quality.mean_abs_err) + "\n";
    }
    return out;
}

}  // namespace topi
