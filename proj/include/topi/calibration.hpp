// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topi/model.hpp"

namespace topi {

// Per-layer context sensitivity: expected total noisy->reference attention
// mass over a calibration set, probed at a fixed timestep subset.
struct SensitivityTable {
    std::vector<double> layer_scores;  // one entry per layer, >= 0
    std::size_t sample_count = 0;
    std::uint64_t model_fingerprint = 0;
};

// The ordered layer anchor set used for influence scoring.
struct RepresentativeLayers {
    std::vector<int> layers;  // distinct, valid, sorted ascending
};

struct CalibSample {
    std::uint64_t noise_seed = 0;
    Matrix reference;
};

// Stable hash of the architecture plus seed; stored with calibration output
// so stale tables are detectable.
std::uint64_t model_fingerprint(const ModelConfig& config);

// Runs each sample's denoising trajectory and accumulates, at every probe
// timestep, the full triple sum of noisy->reference attention per layer.
// probe_steps empty = anchors of the default schedule (interval 10).
SensitivityTable sensitivity_scores(const ToyDiT& model, const std::vector<CalibSample>& samples,
                                    std::vector<int> probe_steps = {});

enum class LayerStrategy {
    top_m,
    random,
    first,
    last,
    all,
};

const char* layer_strategy_name(LayerStrategy s);
LayerStrategy layer_strategy_from_name(const std::string& name);

// top_m picks the M highest-score layers (ties -> lower index). random/first/
// last are ablation baselines; `all` ignores M. Out-of-range M -> error.
RepresentativeLayers select_layers(const SensitivityTable& table, std::size_t m,
                                   LayerStrategy strategy, std::uint64_t seed = 0);

// Published layer sets for the two full-scale reference models, kept as
// cross-check fixtures ("flux" or "qwen").
RepresentativeLayers load_reference_fixture(const std::string& name);
std::size_t reference_fixture_depth(const std::string& name);

}  // namespace topi
