#pragma once

#include "fgsf/config.hpp"
#include "fgsf/sac.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fgsf::harness {

// Dormant/KL bookkeeping carried across logging points.
struct MetricsState {
    bool have_snapshots = false;
    std::vector<double> actor_snapshot;
    std::vector<double> critic_snapshot;
    double dormant_actor = 0.0, dormant_critic = 0.0;
    double kl_actor = 0.0, kl_critic = 0.0;
    long last_metric_step = 0;
};

// Binary format: magic "FGSF", u32 version, resolved config text, per-network
// shape tables with little-endian f64 payloads, optimizer moments, RNG stream
// states, replay buffer, environment state, counters. save/load roundtrips
// are bitwise identical.
void save_checkpoint(const std::string& path, const RunConfig& cfg,
                     sac::TrainLoop& loop, const MetricsState& metrics,
                     long wall_elapsed_ms);

struct LoadedCheckpoint {
    RunConfig cfg;
    std::unique_ptr<sac::TrainLoop> loop;
    MetricsState metrics;
    long wall_elapsed_ms = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace fgsf::harness
