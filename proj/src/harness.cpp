#include "fgsf/harness.hpp"

#include "fgsf/error.hpp"
#include "fgsf/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace fgsf::harness {

namespace {

// Plain CSV sidecar written like the run log: temp file, atomic rename.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header)
        : path_(path), tmp_(path + ".tmp") {
        f_ = std::fopen(tmp_.c_str(), "w");
        if (!f_) throw Error(ErrorKind::Io, "cannot open " + tmp_);
        std::fputs(header.c_str(), f_);
        std::fputc('\n', f_);
    }
    ~CsvWriter() {
        if (f_) std::fclose(f_);
        if (!finalized_) std::remove(tmp_.c_str());
    }
    void row(const std::string& line) {
        std::fputs(line.c_str(), f_);
        std::fputc('\n', f_);
        std::fflush(f_);
    }
    void finalize() {
        if (finalized_) return;
        std::fclose(f_);
        f_ = nullptr;
        if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
            throw Error(ErrorKind::Io, "cannot rename " + tmp_);
        finalized_ = true;
    }

private:
    std::string path_, tmp_;
    FILE* f_ = nullptr;
    bool finalized_ = false;
};

std::vector<double> eval_episodes(sac::TrainLoop& loop, const RunConfig& cfg) {
    auto eval_env = env::make_env(cfg.env_name);
    const auto phase = loop.environment().state_blob();
    std::vector<double> returns;
    returns.reserve(cfg.eval_episodes);
    for (int ep = 0; ep < cfg.eval_episodes; ++ep) {
        // Mirror the training env's task phase (goal position, shift flag)
        // without advancing it across eval episodes.
        eval_env->restore_blob(phase);
        std::vector<double> obs = eval_env->reset(loop.streams().eval);
        double ret = 0.0;
        bool done = false;
        while (!done) {
            ndmath::Matrix obs_row(1, static_cast<int>(obs.size()));
            for (size_t j = 0; j < obs.size(); ++j)
                obs_row(0, static_cast<int>(j)) = obs[j];
            ndmath::Matrix a =
                nets::policy_mean_action(loop.agent().policy, obs_row);
            std::vector<double> action(a.data.begin(), a.data.end());
            env::StepResult sr = eval_env->step(action);
            ret += sr.reward;
            obs = sr.observation;
            done = sr.done;
        }
        returns.push_back(ret);
    }
    return returns;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

double RunResult::final_eval_mean(int episodes_back) const {
    if (eval_returns.empty()) return std::nan("");
    const size_t n = std::min<size_t>(episodes_back, eval_returns.size());
    std::vector<double> tail(eval_returns.end() - n, eval_returns.end());
    return mean_of(tail);
}

double RunResult::final_episode_mean(int episodes_back) const {
    if (episode_returns.empty()) return std::nan("");
    const size_t n = std::min<size_t>(episodes_back, episode_returns.size());
    std::vector<double> tail(episode_returns.end() - n, episode_returns.end());
    return mean_of(tail);
}

RunResult run_training(const RunConfig& run_cfg) {
    RunConfig cfg = run_cfg;
    cfg.validate();
    if (cfg.out_dir.empty())
        throw Error(ErrorKind::Config, "run: out_dir not set");
    fs::create_directories(cfg.out_dir);

    std::unique_ptr<sac::TrainLoop> loop;
    MetricsState ms;
    long wall_offset_ms = 0;
    if (!cfg.resume_from.empty()) {
        LoadedCheckpoint lc = load_checkpoint(cfg.resume_from);
        // Run context comes from the checkpoint; only output placement is
        // taken from the caller.
        lc.cfg.out_dir = cfg.out_dir;
        lc.cfg.resume_from = cfg.resume_from;
        cfg = lc.cfg;
        loop = std::move(lc.loop);
        ms = lc.metrics;
        wall_offset_ms = lc.wall_elapsed_ms;
    } else {
        loop = std::make_unique<sac::TrainLoop>(
            env::make_env(cfg.env_name), cfg.sac_cfg, cfg.method, cfg.scrub,
            cfg.effective_reset_interval(), cfg.seed);
    }

    {
        std::ofstream cfg_echo(fs::path(cfg.out_dir) / "config_resolved.ini");
        if (!cfg_echo) throw Error(ErrorKind::Io, "cannot write config echo");
        cfg_echo << cfg.to_ini();
    }

    const std::string log_path = (fs::path(cfg.out_dir) / "log.csv").string();
    RunLogWriter log(log_path);
    CsvWriter episodes_csv((fs::path(cfg.out_dir) / "episodes.csv").string(),
                           "episode,step,return");
    CsvWriter eval_csv((fs::path(cfg.out_dir) / "eval.csv").string(),
                       "step,episode,return");

    RunResult result;
    result.out_dir = cfg.out_dir;
    result.log_path = log_path;

    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&]() {
        return wall_offset_ms + static_cast<long>(
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0).count());
    };

    long scrubs_aborted = 0;
    loop->after_update = [&](sac::TrainLoop& l) {
        if (l.grad_steps() % cfg.log_every != 0) return;
        RunLogRow row;
        row.step = l.grad_steps();
        row.episode_return = l.has_episode() ? l.last_episode_return() : 0.0;
        row.tr_f_actor = l.actor_trace();
        row.tr_f_critic = l.critic_trace();

        if (!ms.have_snapshots ||
            l.grad_steps() - ms.last_metric_step >= cfg.metrics_every) {
            auto& agent = l.agent();
            const auto& batch = l.last_batch();
            metrics::DormantSpec dspec;
            ms.dormant_actor =
                metrics::dormant_fraction(agent.policy.net, batch.obs, dspec);
            ndmath::Matrix critic_in = nets::concat_cols(batch.obs, batch.action);
            ms.dormant_critic =
                metrics::dormant_fraction(agent.critic.q1, critic_in, dspec);
            std::vector<double> actor_now = agent.policy.net.flatten();
            std::vector<double> critic_now = agent.critic.q1.flatten();
            if (ms.have_snapshots) {
                ms.kl_actor = metrics::weight_update_kl(ms.actor_snapshot, actor_now);
                ms.kl_critic = metrics::weight_update_kl(ms.critic_snapshot, critic_now);
            } else {
                ms.kl_actor = 0.0;
                ms.kl_critic = 0.0;
            }
            ms.actor_snapshot = std::move(actor_now);
            ms.critic_snapshot = std::move(critic_now);
            ms.have_snapshots = true;
            ms.last_metric_step = l.grad_steps();
        }
        row.dormant_actor = ms.dormant_actor;
        row.dormant_critic = ms.dormant_critic;
        row.kl_actor = ms.kl_actor;
        row.kl_critic = ms.kl_critic;
        row.alpha = l.agent().alpha();
        row.wall_ms = wall_ms();
        log.append(row);
    };

    try {
        while (loop->env_steps() < cfg.total_env_steps) {
            sac::LoopEvents ev = loop->train_iteration();
            scrubs_aborted += ev.scrubs_aborted;
            if (ev.episode_done) {
                result.episode_returns.push_back(ev.episode_return);
                std::ostringstream os;
                os << loop->episodes() << "," << loop->env_steps() << ","
                   << format_double(ev.episode_return);
                episodes_csv.row(os.str());
            }
            if (loop->env_steps() % cfg.eval_every == 0) {
                const auto evals = eval_episodes(*loop, cfg);
                for (size_t i = 0; i < evals.size(); ++i) {
                    result.eval_returns.push_back(evals[i]);
                    std::ostringstream os;
                    os << loop->env_steps() << "," << i << ","
                       << format_double(evals[i]);
                    eval_csv.row(os.str());
                }
            }
            if (cfg.checkpoint_at > 0 && loop->env_steps() == cfg.checkpoint_at) {
                save_checkpoint((fs::path(cfg.out_dir) /
                                 ("checkpoint_step" + std::to_string(cfg.checkpoint_at) +
                                  ".bin")).string(),
                                cfg, *loop, ms, wall_ms());
            }
        }
    } catch (const Error& e) {
        // Diagnostic row marking the abort point, then surface the failure
        // through the result instead of tearing the process down.
        RunLogRow row;
        row.step = loop->grad_steps() + 1;
        row.episode_return = std::nan("");
        row.tr_f_actor = row.tr_f_critic = std::nan("");
        row.dormant_actor = row.dormant_critic = std::nan("");
        row.kl_actor = row.kl_critic = std::nan("");
        row.alpha = std::nan("");
        row.wall_ms = wall_ms();
        log.append(row);
        result.aborted = true;
        result.abort_reason = e.what();
        std::ofstream mark(fs::path(cfg.out_dir) / "ABORTED.txt");
        mark << e.what() << "\n";
    }

    save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.bin").string(), cfg, *loop,
                    ms, wall_ms());
    log.finalize();
    episodes_csv.finalize();
    eval_csv.finalize();

    result.env_steps = loop->env_steps();
    result.grad_steps = loop->grad_steps();
    result.episodes = loop->episodes();
    result.scrubs_aborted = scrubs_aborted;
    return result;
}

std::vector<double> read_episode_returns(const std::string& episodes_csv) {
    std::ifstream in(episodes_csv);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + episodes_csv);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::Io, "empty episodes file");
    std::vector<double> returns;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t c2 = line.rfind(',');
        if (c2 == std::string::npos)
            throw Error(ErrorKind::Config, "malformed episodes row: " + line);
        returns.push_back(std::stod(line.substr(c2 + 1)));
    }
    return returns;
}

Analysis analyze_log(const std::string& csv_path, const pbdetect::SavGolSpec& spec,
                     const pbdetect::PhaseThresholds& thresholds) {
    RunLogData data = read_runlog(csv_path);
    pbdetect::TraceSeries actor_series, critic_series;
    for (const auto& r : data.rows) {
        if (std::isnan(r.tr_f_actor) || std::isnan(r.tr_f_critic)) continue;
        actor_series.steps.push_back(static_cast<double>(r.step));
        actor_series.values.push_back(r.tr_f_actor);
        critic_series.steps.push_back(static_cast<double>(r.step));
        critic_series.values.push_back(r.tr_f_critic);
    }

    Analysis a;
    a.actor = pbdetect::classify_phases(actor_series, spec, thresholds);
    a.critic = pbdetect::classify_phases(critic_series, spec, thresholds);
    a.pb_either = a.actor.pb_detected || a.critic.pb_detected;

    std::ostringstream os;
    os << pbdetect::report_to_text(a.actor, "actor");
    os << pbdetect::report_to_text(a.critic, "critic");
    os << "[run]\n  pb_detected (either network): " << (a.pb_either ? "yes" : "no")
       << "\n";

    const fs::path episodes_path = fs::path(csv_path).parent_path() / "episodes.csv";
    if (fs::exists(episodes_path)) {
        std::vector<double> returns = read_episode_returns(episodes_path.string());
        const size_t n = std::min<size_t>(100, returns.size());
        if (n > 0) {
            std::vector<double> tail(returns.end() - n, returns.end());
            a.have_returns = true;
            a.final_mean = mean_of(tail);
            a.final_std = std_of(tail);
            a.episodes_counted = static_cast<int>(n);
            os << "  final " << n << " episode return: " << a.final_mean << " +/- "
               << a.final_std << "\n";
        }
    } else {
        os << "  episode returns: episodes.csv not found next to log\n";
    }
    a.text = os.str();
    return a;
}

void apply_axis_value(RunConfig& cfg, const std::string& axis, const std::string& value) {
    if (axis == "lambda") {
        apply_kv(cfg, "scrub.lambda", value);
    } else if (axis == "replay_ratio") {
        apply_kv(cfg, "sac.replay_ratio", value);
    } else if (axis == "target") {
        apply_kv(cfg, "scrub.target", value);
    } else {
        throw Error(ErrorKind::Config, "unknown sweep axis: " + axis);
    }
}

SweepResult sweep(const RunConfig& base, const SweepSpec& spec) {
    if (spec.values.empty() || spec.seeds.empty())
        throw Error(ErrorKind::Config, "sweep: values and seeds must be non-empty");
    if (base.out_dir.empty())
        throw Error(ErrorKind::Config, "sweep: out_dir not set");

    struct Job {
        RunConfig cfg;
        SweepCell cell;
    };
    std::vector<Job> jobs;
    std::map<std::string, int> dir_uses; // duplicated (value, seed) cells get suffixes
    for (const auto& value : spec.values) {
        for (uint64_t seed : spec.seeds) {
            Job j;
            j.cfg = base;
            j.cell.value = value;
            j.cell.seed = seed;
            try {
                apply_axis_value(j.cfg, spec.axis, value);
            } catch (const std::exception& e) {
                j.cell.failed = true;
                j.cell.error = e.what();
            }
            j.cfg.seed = seed;
            std::string dir = (fs::path(base.out_dir) /
                               (spec.axis + "=" + value) /
                               ("seed" + std::to_string(seed))).string();
            const int uses = dir_uses[dir]++;
            if (uses > 0) dir += "_" + std::to_string(uses);
            j.cfg.out_dir = dir;
            j.cell.dir = j.cfg.out_dir;
            jobs.push_back(std::move(j));
        }
    }

    std::mutex mu;
    size_t next = 0;
    const int workers = std::max(1, std::min<int>(spec.jobs, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                size_t idx;
                {
                    std::lock_guard<std::mutex> lk(mu);
                    if (next >= jobs.size()) return;
                    idx = next++;
                }
                Job& j = jobs[idx];
                if (j.cell.failed) continue;
                try {
                    RunResult r = run_training(j.cfg);
                    if (r.aborted) {
                        j.cell.failed = true;
                        j.cell.error = r.abort_reason;
                    }
                    const size_t n = std::min<size_t>(100, r.episode_returns.size());
                    j.cell.final_returns.assign(r.episode_returns.end() - n,
                                                r.episode_returns.end());
                    j.cell.final_mean = mean_of(j.cell.final_returns);
                } catch (const std::exception& e) {
                    j.cell.failed = true;
                    j.cell.error = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    SweepResult res;
    fs::create_directories(base.out_dir);
    res.summary_path = (fs::path(base.out_dir) / "summary.csv").string();
    CsvWriter summary(res.summary_path, "axis,value,seed,status,final_mean");
    std::ostringstream table;
    table << "sweep axis: " << spec.axis << "\n";
    for (const auto& value : spec.values) {
        std::vector<double> pooled;
        int failed = 0;
        for (auto& j : jobs) {
            if (j.cell.value != value) continue;
            std::ostringstream os;
            os << spec.axis << "," << value << "," << j.cell.seed << ","
               << (j.cell.failed ? "failed" : "ok") << ","
               << format_double(j.cell.final_mean);
            summary.row(os.str());
            if (j.cell.failed) {
                ++failed;
            } else {
                pooled.insert(pooled.end(), j.cell.final_returns.begin(),
                              j.cell.final_returns.end());
            }
            res.cells.push_back(j.cell);
        }
        table << "  " << spec.axis << "=" << value << ": ";
        if (pooled.empty()) {
            table << "all seeds failed\n";
        } else {
            table << mean_of(pooled) << " +/- " << std_of(pooled)
                  << " (final-100 returns pooled over seeds";
            if (failed) table << ", " << failed << " failed";
            table << ")\n";
        }
    }
    summary.finalize();
    res.table_text = table.str();
    return res;
}

} // namespace fgsf::harness
