// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/calibration.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "topi/engine.hpp"
#include "topi/errors.hpp"
#include "topi/rng.hpp"

namespace topi {

std::uint64_t model_fingerprint(const ModelConfig& config) {
    // FNV-1a over the fields that change the weight set.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (v >> (8 * byte)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    };
    mix(config.depth_double);
    mix(config.depth_single);
    mix(config.heads);
    mix(config.head_dim);
    mix(config.ffn_mult);
    mix(config.n_noisy);
    mix(config.n_ref);
    mix(config.n_prompt);
    mix(config.steps);
    mix(config.seed);
    return h;
}

SensitivityTable sensitivity_scores(const ToyDiT& model, const std::vector<CalibSample>& samples,
                                    std::vector<int> probe_steps) {
    if (samples.empty()) {
        throw std::invalid_argument("sensitivity_scores: need at least one calibration sample");
    }
    const ModelConfig& cfg = model.config;
    if (probe_steps.empty()) {
        probe_steps = make_schedule(static_cast<int>(cfg.steps), 10).anchors;
    }
    for (int t : probe_steps) {
        if (t < 1 || t > static_cast<int>(cfg.steps)) {
            throw std::invalid_argument("sensitivity_scores: probe timestep out of range");
        }
    }

    std::vector<int> all_layers(cfg.total_layers());
    std::iota(all_layers.begin(), all_layers.end(), 0);

    SensitivityTable table;
    table.layer_scores.assign(cfg.total_layers(), 0.0);
    table.sample_count = samples.size();
    table.model_fingerprint = model_fingerprint(cfg);

    std::size_t probes_accumulated = 0;
    for (const CalibSample& sample : samples) {
        Matrix g = seeded_fill(cfg.n_noisy, cfg.d_model(), sample.noise_seed,
                               FillDist::gaussian(1.0));
        for (int t = static_cast<int>(cfg.steps); t >= 1; --t) {
            const bool probe = std::find(probe_steps.begin(), probe_steps.end(), t) !=
                               probe_steps.end();
            const SequenceState state = make_state(model, g, sample.reference, t);
            const DenoiseOutput out =
                denoise_step(model, state, probe ? all_layers : std::vector<int>{});
            if (probe) {
                for (const AttentionCapture& c : out.captures) {
                    double triple_sum = 0.0;
                    for (double a : c.attn) {
                        triple_sum += a;
                    }
                    table.layer_scores[static_cast<std::size_t>(c.layer)] += triple_sum;
                }
                ++probes_accumulated;
            }
            apply_update(g, out.eps_hat, cfg.steps);
        }
    }

    const double inv = 1.0 / static_cast<double>(probes_accumulated);
    for (double& v : table.layer_scores) {
        v *= inv;
    }
    return table;
}

const char* layer_strategy_name(LayerStrategy s) {
    switch (s) {
        case LayerStrategy::top_m: return "top_m";
        case LayerStrategy::random: return "random";
        case LayerStrategy::first: return "first";
        case LayerStrategy::last: return "last";
        case LayerStrategy::all: return "all";
    }
    return "unknown";
}

LayerStrategy layer_strategy_from_name(const std::string& name) {
    if (name == "top_m") return LayerStrategy::top_m;
    if (name == "random") return LayerStrategy::random;
    if (name == "first") return LayerStrategy::first;
    if (name == "last") return LayerStrategy::last;
    if (name == "all") return LayerStrategy::all;
    throw std::invalid_argument("unknown layer strategy: " + name);
}

RepresentativeLayers select_layers(const SensitivityTable& table, std::size_t m,
                                   LayerStrategy strategy, std::uint64_t seed) {
    const std::size_t n = table.layer_scores.size();
    RepresentativeLayers out;
    if (strategy == LayerStrategy::all) {
        out.layers.resize(n);
        std::iota(out.layers.begin(), out.layers.end(), 0);
        return out;
    }
    if (m < 1 || m > n) {
        throw std::invalid_argument("select_layers: M out of range (1.." + std::to_string(n) +
                                    ")");
    }
    switch (strategy) {
        case LayerStrategy::top_m: {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (table.layer_scores[a] != table.layer_scores[b]) {
                    return table.layer_scores[a] > table.layer_scores[b];
                }
                return a < b;
            });
            for (std::size_t i = 0; i < m; ++i) {
                out.layers.push_back(static_cast<int>(order[i]));
            }
            break;
        }
        case LayerStrategy::first: {
            for (std::size_t i = 0; i < m; ++i) {
                out.layers.push_back(static_cast<int>(i));
            }
            break;
        }
        case LayerStrategy::last: {
            for (std::size_t i = n - m; i < n; ++i) {
                out.layers.push_back(static_cast<int>(i));
            }
            break;
        }
        case LayerStrategy::random: {
            Xoshiro256pp rng(seed);
            std::vector<std::size_t> pool(n);
            std::iota(pool.begin(), pool.end(), 0);
            for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
                const std::size_t j =
                    i + static_cast<std::size_t>(rng.next_u64() %
                                                 static_cast<std::uint64_t>(pool.size() - i));
                std::swap(pool[i], pool[j]);
            }
            for (std::size_t i = 0; i < m; ++i) {
                out.layers.push_back(static_cast<int>(pool[i]));
            }
            break;
        }
        case LayerStrategy::all:
            break;  // handled above
    }
    std::sort(out.layers.begin(), out.layers.end());
    return out;
}

RepresentativeLayers load_reference_fixture(const std::string& name) {
    if (name == "flux") {
        return RepresentativeLayers{{13, 18, 31}};
    }
    if (name == "qwen") {
        return RepresentativeLayers{{35, 37, 42}};
    }
    throw std::invalid_argument("unknown reference fixture: " + name);
}

std::size_t reference_fixture_depth(const std::string& name) {
    if (name == "flux") {
        return 57;
    }
    if (name == "qwen") {
        return 60;
    }
    throw std::invalid_argument("unknown reference fixture: " + name);
}

}  // namespace topi
