// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "topi/analysis.hpp"
#include "topi/calibration.hpp"
#include "topi/engine.hpp"
#include "topi/flops.hpp"
#include "topi/metrics.hpp"
#include "topi/pruning.hpp"

namespace topi {

// Every artifact carries this version; bump on any breaking layout change.
inline constexpr int kSchemaVersion = 1;

// JSON writers produce deterministic bytes: insertion-ordered keys, two-space
// indent, shortest round-trip doubles. Rerunning a command with the same
// config yields byte-identical files.
std::string calibration_to_json(const SensitivityTable& table, const RepresentativeLayers& layers,
                                LayerStrategy strategy, std::size_t m);

// Reads the layer set back from a calibration artifact. A nonzero
// expect_fingerprint must match the stored one (config_error otherwise), so
// stale tables cannot silently feed a differently-shaped model.
RepresentativeLayers layers_from_calibration_json(const std::string& text,
                                                  std::uint64_t expect_fingerprint);

// Complete trajectory record, replayable through trajectory_from_json.
// policy may be null for unpruned baselines.
std::string trajectory_to_json(const TrajectoryRecord& record, const std::string& label,
                               const PrunerPolicy* policy, std::uint64_t fingerprint,
                               std::uint64_t noise_seed, std::uint64_t ref_seed);
TrajectoryRecord trajectory_from_json(const std::string& text);

std::string quality_to_json(const QualityReport& report, const std::string& baseline_label,
                            const std::string& candidate_label);

// The flops table in both shapes. GFLOPs and reductions appear as the same
// formatted strings in either output, so the JSON equals what was printed.
std::string flops_to_json(const FlopsReport& report, const OverheadFlops& overhead,
                          std::uint64_t interval);
std::string flops_to_text(const FlopsReport& report, const OverheadFlops& overhead,
                          std::uint64_t interval);

// CSV series data; first line is "# schema_version=1".
std::string profile_layer_csv(const AttentionProfile& profile);
std::string profile_step_csv(const AttentionProfile& profile);
std::string profile_token_csv(const AttentionProfile& profile);

// One ablation-grid cell, flattened for CSV comparison across cells.
struct AblationRow {
    std::string cell;
    double tau = 0.0;
    std::string schedule;
    std::string metric;
    std::string reduction;
    std::string layers;            // space-separated layer set
    std::size_t anchors = 0;
    std::size_t k_sel_first = 0;   // mask size at the first anchor
    std::size_t k_sel_last = 0;
    std::uint64_t gather_rows = 0;
    QualityReport quality;         // vs. the shared full-context run
};

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace topi
