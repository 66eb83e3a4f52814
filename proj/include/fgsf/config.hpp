#pragma once

#include "fgsf/fim.hpp"
#include "fgsf/sac.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace fgsf::harness {

struct RunConfig {
    std::string env_name = "pendulum";
    sac::Method method = sac::Method::Baseline;
    fim::ScrubConfig scrub;
    sac::SacConfig sac_cfg;
    long total_env_steps = 30000;
    long eval_every = 1000;   // env steps
    int eval_episodes = 5;
    long log_every = 200;     // gradient steps
    long metrics_every = 1000;// gradient steps between dormant/KL refreshes
    long reset_interval = 0;  // gradient steps; 0 -> total run scaled to 5 resets
    uint64_t seed = 0;
    std::string out_dir;
    long checkpoint_at = 0;   // env step at which to also dump a checkpoint
    std::string resume_from;

    void validate() const;
    long effective_reset_interval() const;
    std::string to_ini() const;
};

// Flat key=value text with [sections]; '#' starts a comment.
std::map<std::string, std::string> parse_ini(const std::string& text);
RunConfig config_from_ini(const std::string& text);
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

} // namespace fgsf::harness
