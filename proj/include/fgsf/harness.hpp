#pragma once

#include "fgsf/checkpoint.hpp"
#include "fgsf/config.hpp"
#include "fgsf/pbdetect.hpp"
#include "fgsf/runlog.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fgsf::harness {

struct RunResult {
    std::string out_dir;
    std::string log_path;
    long env_steps = 0;
    long grad_steps = 0;
    long episodes = 0;
    std::vector<double> episode_returns;      // training episodes, in order
    std::vector<double> eval_returns;         // all evaluation episodes, in order
    long scrubs_aborted = 0;
    bool aborted = false;
    std::string abort_reason;

    double final_eval_mean(int episodes_back) const;
    double final_episode_mean(int episodes_back) const;
};

// Executes the configured training run; writes log.csv, episodes.csv,
// eval.csv, config_resolved.ini and checkpoint.bin under cfg.out_dir
// (CSV files appear atomically via temp + rename on completion).
RunResult run_training(const RunConfig& cfg);

struct Analysis {
    pbdetect::PhaseReport actor;
    pbdetect::PhaseReport critic;
    bool pb_either = false;
    bool have_returns = false;
    double final_mean = 0.0;
    double final_std = 0.0;
    int episodes_counted = 0;
    std::string text;
};

// Post-hoc phase detection on both trace columns plus final-100-episode
// return statistics (episodes.csv next to the log, when present).
Analysis analyze_log(const std::string& csv_path, const pbdetect::SavGolSpec& spec,
                     const pbdetect::PhaseThresholds& thresholds);

struct SweepSpec {
    std::string axis;                 // lambda | replay_ratio | target
    std::vector<std::string> values;
    std::vector<uint64_t> seeds;
    int jobs = 2;
};

struct SweepCell {
    std::string value;
    uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::string dir;
    double final_mean = 0.0; // mean of final 100 episode returns
    std::vector<double> final_returns;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::string summary_path;
    std::string table_text;
};

// One run per (value, seed) under base.out_dir/<axis>=<value>/seed<seed>,
// independent RNG streams; failures are recorded, not fatal.
SweepResult sweep(const RunConfig& base, const SweepSpec& spec);

void apply_axis_value(RunConfig& cfg, const std::string& axis, const std::string& value);

std::vector<double> read_episode_returns(const std::string& episodes_csv);

} // namespace fgsf::harness
