#pragma once

#include "fgsf/env.hpp"
#include "fgsf/fim.hpp"
#include "fgsf/nets.hpp"
#include "fgsf/replay.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace fgsf::sac {

using ndmath::Matrix;

struct SacConfig {
    double gamma = 0.99;
    double tau = 0.005;
    double learning_rate = 3e-4;
    int batch_size = 256;
    int warmup_steps = 1000;
    double target_entropy = 0.0; // 0 -> -action_dim at agent construction
    int replay_ratio = 1;
    int hidden_units = 64;
    int hidden_layers = 2;
    ndmath::Activation activation = ndmath::Activation::Tanh;
    double init_log_alpha = 0.0;
    size_t buffer_capacity = 100000;

    void validate() const;
};

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Per-layer first/second moments mirroring an Mlp's parameter matrices.
struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long t = 0;

    static AdamState like(const ndmath::Mlp& net);
    void step(ndmath::Mlp& net, const std::vector<Matrix>& grads, const AdamConfig& cfg);
};

struct ScalarAdam {
    double m = 0.0;
    double v = 0.0;
    long t = 0;

    void step(double& w, double g, const AdamConfig& cfg);
};

struct Agent {
    nets::GaussianPolicy policy;
    nets::TwinCritic critic;
    nets::TwinCritic target_critic;
    double log_alpha = 0.0;
    AdamState opt_policy, opt_q1, opt_q2;
    ScalarAdam opt_alpha;
    SacConfig cfg;
    int obs_dim = 0;
    int act_dim = 0;

    double alpha() const { return std::exp(log_alpha); }
    static Agent make(int obs_dim, int act_dim, const SacConfig& cfg, Rng& init_rng);
};

struct CriticUpdateResult {
    double loss = 0.0;
    std::vector<double> td_targets;
    std::vector<double> q1_values, q2_values;
    // Backprops with unit output gradients, retained so FIM scores and the
    // TD gradients share one backward pass (row-rescale of the g side).
    fim::ScoreBatch unit_q1, unit_q2;
};

// One adaptive-moment step on both critics against the twin-target TD value
// y = r + gamma (1-done) (min Q' - alpha log pi(a'|s')). Loss is the mean
// over both critics and the batch of squared errors.
CriticUpdateResult critic_update(Agent& agent, const Batch& batch, Rng& update_rng);

// Reparameterized actor objective mean[alpha log pi(a~|s) - min Q(s, a~)].
double actor_update(Agent& agent, const Batch& batch, Rng& update_rng,
                    std::vector<double>* log_probs_out = nullptr);

// loss = -log_alpha * mean(log pi + target_entropy); one step on log_alpha.
void alpha_update(Agent& agent, const std::vector<double>& log_probs);

void polyak_step(Agent& agent);

// Reset mitigation: reinitialize actor, critics, targets and all optimizer
// moments from fresh draws; replay buffer (and log_alpha value) preserved.
void periodic_reset(Agent& agent, Rng& reset_rng);

enum class Method { Baseline, Fgsf, Reset, Gauss };
Method method_from_name(const std::string& name);
std::string method_name(Method m);

// Named independent RNG substreams of the master seed. Separation is the
// shared-stream discipline: methods that consume scrub/probe draws cannot
// perturb env or action streams.
struct Streams {
    Rng env, action, replay, update, scrub, probe, reset, eval;

    static Streams from_seed(uint64_t master);
    std::vector<std::pair<std::string, Rng*>> named();
};

struct LoopEvents {
    bool episode_done = false;
    double episode_return = 0.0;
    int updates_done = 0;
    int scrubs_aborted = 0;
};

class TrainLoop {
public:
    TrainLoop(std::unique_ptr<env::Env> environment, const SacConfig& sac_cfg,
              Method method, const fim::ScrubConfig& scrub, long reset_interval,
              uint64_t seed);

    // One environment step, then replay_ratio SAC updates (post-warmup), then
    // any due scrub/reset. after_update runs after every completed gradient
    // step (counters already advanced).
    LoopEvents train_iteration();

    long env_steps() const { return env_steps_; }
    long grad_steps() const { return grad_steps_; }
    long episodes() const { return episodes_; }
    double last_episode_return() const { return last_episode_return_; }
    bool has_episode() const { return episodes_ > 0; }

    Agent& agent() { return agent_; }
    const Agent& agent() const { return agent_; }
    env::Env& environment() { return *env_; }
    Streams& streams() { return streams_; }
    Method method() const { return method_; }
    const fim::ScrubConfig& scrub_config() const { return scrub_; }
    long reset_interval() const { return reset_interval_; }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }

    std::function<void(TrainLoop&)> after_update;

    // Fisher traces on the most recent update batch with the configured
    // estimator: actor from fresh Monte-Carlo policy scores, critic from the
    // retained unit backprops of q1. Consumes the probe stream only.
    double actor_trace();
    double critic_trace();
    bool has_batch() const { return last_batch_.has_value(); }
    const Batch& last_batch() const { return *last_batch_; }
    const CriticUpdateResult& last_critic_result() const { return *last_critic_; }

    // Checkpoint plumbing.
    std::vector<double>& current_obs() { return obs_; }
    double& episode_return_acc() { return ep_return_; }
    int& episode_len() { return ep_len_; }
    double& last_episode_return_ref() { return last_episode_return_; }
    long& env_steps_ref() { return env_steps_; }
    long& grad_steps_ref() { return grad_steps_; }
    long& episodes_ref() { return episodes_; }
    void reset_env_from_stream() { obs_ = env_->reset(streams_.env); }

private:
    void one_update(LoopEvents& ev);
    void apply_scrub(LoopEvents& ev);

    std::unique_ptr<env::Env> env_;
    Agent agent_;
    ReplayBuffer buffer_;
    Streams streams_;
    Method method_;
    fim::ScrubConfig scrub_;
    long reset_interval_;

    long env_steps_ = 0;
    long grad_steps_ = 0;
    long episodes_ = 0;
    std::vector<double> obs_;
    double ep_return_ = 0.0;
    int ep_len_ = 0;
    double last_episode_return_ = 0.0;

    std::optional<Batch> last_batch_;
    std::optional<CriticUpdateResult> last_critic_;
};

} // namespace fgsf::sac
