#include "fgsf/harness.hpp"

#include "fgsf/error.hpp"
#include "fgsf/kernels.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int exit_code_for(const fgsf::Error& e) {
    switch (e.kind()) {
        case fgsf::ErrorKind::Config:
        case fgsf::ErrorKind::InvalidArgument:
            return 1;
        case fgsf::ErrorKind::Io:
        case fgsf::ErrorKind::BadMagic:
        case fgsf::ErrorKind::VersionMismatch:
        case fgsf::ErrorKind::TruncatedPayload:
            return 3;
        default:
            return 2;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fgsf::Error(fgsf::ErrorKind::Io, "cannot open config file " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
    std::vector<uint64_t> seeds;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        seeds.push_back(std::stoull(tok));
    }
    return seeds;
}

std::vector<std::string> parse_values(const std::string& csv) {
    std::vector<std::string> values;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (!tok.empty()) values.push_back(tok);
    }
    return values;
}

} // namespace

int main(int argc, char** argv) {
    using namespace fgsf;

    CLI::App app{"Fisher-guided selective forgetting lab: SAC training with "
                 "FIM-based scrubbing, trace logging and phase analysis"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "run one training configuration");
    std::string config_path, env_name, method, estimator, target, out_dir, resume;
    double lambda = -1.0, damping = -1.0;
    long steps = -1, scrub_freq = -1, replay_ratio = -1, log_every = -1,
         eval_every = -1, reset_interval = -1, checkpoint_at = -1;
    long long seed = -1;
    std::string activation;
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--env", env_name, "pendulum | shifting_goal");
    train->add_option("--method", method, "baseline | fgsf | reset | gauss");
    train->add_option("--lambda", lambda, "forgetting magnitude");
    train->add_option("--scrub-freq", scrub_freq, "gradient steps between scrubs");
    train->add_option("--scrub-target", target, "actor | critic | both");
    train->add_option("--estimator", estimator, "diag | kfac | ekfac");
    train->add_option("--damping", damping, "eigenvalue floor for the scrub");
    train->add_option("--replay-ratio", replay_ratio, "updates per env step");
    train->add_option("--steps", steps, "total environment steps");
    train->add_option("--seed", seed, "master seed");
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--log-every", log_every, "gradient steps between log rows");
    train->add_option("--eval-every", eval_every, "env steps between evaluations");
    train->add_option("--reset-interval", reset_interval,
                      "gradient steps between resets (reset method)");
    train->add_option("--checkpoint-at", checkpoint_at,
                      "also dump a checkpoint at this env step");
    train->add_option("--resume", resume, "checkpoint to resume from");
    train->add_option("--activation", activation, "tanh | relu");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "phase report for a run log");
    std::string log_path;
    int window = 51, polyorder = 3;
    double rho = 2.0;
    analyze->add_option("--log", log_path, "path to log.csv")->required();
    analyze->add_option("--window", window, "Savitzky-Golay window (odd)");
    analyze->add_option("--polyorder", polyorder, "Savitzky-Golay polynomial order");
    analyze->add_option("--rho", rho, "peak/plateau prominence threshold");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "grid of runs over one axis");
    std::string axis, values_csv, seeds_csv;
    int jobs = 2;
    sweep_cmd->add_option("--axis", axis, "lambda | replay_ratio | target")->required();
    sweep_cmd->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep_cmd->add_option("--seeds", seeds_csv, "comma-separated seeds")->required();
    sweep_cmd->add_option("--jobs", jobs, "parallel runs");
    sweep_cmd->add_option("--config", config_path, "key=value config file");
    sweep_cmd->add_option("--env", env_name, "environment");
    sweep_cmd->add_option("--method", method, "training method");
    sweep_cmd->add_option("--steps", steps, "total environment steps");
    sweep_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        harness::RunConfig cfg;
        if (!config_path.empty()) cfg = harness::config_from_ini(read_file(config_path));
        if (!env_name.empty()) harness::apply_kv(cfg, "run.env", env_name);
        if (!method.empty()) harness::apply_kv(cfg, "run.method", method);
        if (steps >= 0) cfg.total_env_steps = steps;
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (lambda >= 0.0) cfg.scrub.lambda = lambda;
        if (scrub_freq >= 0) cfg.scrub.frequency = static_cast<int>(scrub_freq);
        if (!target.empty()) harness::apply_kv(cfg, "scrub.target", target);
        if (!estimator.empty()) harness::apply_kv(cfg, "scrub.estimator", estimator);
        if (damping >= 0.0) cfg.scrub.damping = damping;
        if (replay_ratio >= 0) cfg.sac_cfg.replay_ratio = static_cast<int>(replay_ratio);
        if (log_every >= 0) cfg.log_every = log_every;
        if (eval_every >= 0) cfg.eval_every = eval_every;
        if (reset_interval >= 0) cfg.reset_interval = reset_interval;
        if (checkpoint_at >= 0) cfg.checkpoint_at = checkpoint_at;
        if (!resume.empty()) cfg.resume_from = resume;
        if (!activation.empty()) harness::apply_kv(cfg, "sac.activation", activation);

        if (train->parsed()) {
            harness::RunResult r = harness::run_training(cfg);
            std::cout << "run complete: " << r.env_steps << " env steps, "
                      << r.grad_steps << " gradient updates, " << r.episodes
                      << " episodes\n";
            std::cout << "kernel backend: "
                      << kernels::backend_name(kernels::active_backend()) << "\n";
            std::cout << "log: " << r.log_path << "\n";
            if (!r.eval_returns.empty())
                std::cout << "final eval mean (last 10 episodes): "
                          << r.final_eval_mean(10) << "\n";
            if (r.aborted) {
                std::cout << "run aborted: " << r.abort_reason << "\n";
                return 2;
            }
            return 0;
        }
        if (analyze->parsed()) {
            pbdetect::SavGolSpec spec;
            spec.window = window;
            spec.polyorder = polyorder;
            pbdetect::PhaseThresholds th;
            th.prominence = rho;
            harness::Analysis a = harness::analyze_log(log_path, spec, th);
            std::cout << a.text;
            return 0;
        }
        if (sweep_cmd->parsed()) {
            harness::SweepSpec spec;
            spec.axis = axis;
            spec.values = parse_values(values_csv);
            spec.seeds = parse_seeds(seeds_csv);
            spec.jobs = jobs;
            harness::SweepResult r = harness::sweep(cfg, spec);
            std::cout << r.table_text;
            std::cout << "summary: " << r.summary_path << "\n";
            for (const auto& c : r.cells)
                if (c.failed)
                    std::cout << "failed cell " << spec.axis << "=" << c.value
                              << " seed " << c.seed << ": " << c.error << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
