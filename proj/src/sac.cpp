#include "fgsf/sac.hpp"

#include "fgsf/error.hpp"
#include "fgsf/kernels.hpp"

#include <cmath>

namespace fgsf::sac {

void SacConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw Error(ErrorKind::Config, "sac: gamma must be in (0, 1)");
    if (!(tau > 0.0 && tau <= 1.0))
        throw Error(ErrorKind::Config, "sac: tau must be in (0, 1]");
    if (learning_rate <= 0.0)
        throw Error(ErrorKind::Config, "sac: learning_rate must be > 0");
    if (batch_size < 1)
        throw Error(ErrorKind::Config, "sac: batch_size must be >= 1");
    if (warmup_steps < batch_size)
        throw Error(ErrorKind::Config, "sac: warmup_steps must cover one batch");
    if (replay_ratio < 1)
        throw Error(ErrorKind::Config, "sac: replay_ratio must be >= 1");
    if (hidden_units < 1 || hidden_layers < 1)
        throw Error(ErrorKind::Config, "sac: network size must be positive");
    if (buffer_capacity < static_cast<size_t>(batch_size))
        throw Error(ErrorKind::Config, "sac: buffer capacity below batch size");
}

AdamState AdamState::like(const ndmath::Mlp& net) {
    AdamState s;
    for (const auto& l : net.layers) {
        s.m.emplace_back(l.wb.rows, l.wb.cols);
        s.v.emplace_back(l.wb.rows, l.wb.cols);
    }
    return s;
}

void AdamState::step(ndmath::Mlp& net, const std::vector<Matrix>& grads,
                     const AdamConfig& cfg) {
    if (grads.size() != net.layers.size())
        throw Error(ErrorKind::DimMismatch, "adam: gradient/layer count mismatch");
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t l = 0; l < net.layers.size(); ++l) {
        auto& wb = net.layers[l].wb;
        kernels::ops().adam_step(wb.data.data(), grads[l].data.data(),
                                 m[l].data.data(), v[l].data.data(),
                                 cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                                 bc1, bc2, static_cast<int>(wb.size()));
    }
}

void ScalarAdam::step(double& w, double g, const AdamConfig& cfg) {
    ++t;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
    w -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
}

Agent Agent::make(int obs_dim, int act_dim, const SacConfig& cfg, Rng& init_rng) {
    cfg.validate();
    Agent a;
    a.cfg = cfg;
    a.obs_dim = obs_dim;
    a.act_dim = act_dim;
    if (a.cfg.target_entropy == 0.0) a.cfg.target_entropy = -static_cast<double>(act_dim);
    a.policy = nets::make_policy(obs_dim, act_dim, cfg.hidden_units, cfg.hidden_layers,
                                 cfg.activation, init_rng);
    a.critic = nets::make_critic(obs_dim, act_dim, cfg.hidden_units, cfg.hidden_layers,
                                 cfg.activation, init_rng);
    a.target_critic.q1 = a.critic.q1;
    a.target_critic.q2 = a.critic.q2;
    a.log_alpha = cfg.init_log_alpha;
    a.opt_policy = AdamState::like(a.policy.net);
    a.opt_q1 = AdamState::like(a.critic.q1);
    a.opt_q2 = AdamState::like(a.critic.q2);
    return a;
}

namespace {

AdamConfig adam_of(const SacConfig& cfg) {
    AdamConfig a;
    a.lr = cfg.learning_rate;
    return a;
}

std::vector<Matrix> rowscaled_batch_grads(const fim::ScoreBatch& unit,
                                          const std::vector<double>& scale) {
    fim::ScoreBatch scaled = fim::scale_scores(unit, scale);
    return scaled.batch_grads();
}

} // namespace

CriticUpdateResult critic_update(Agent& agent, const Batch& batch, Rng& update_rng) {
    const int n = batch.size();
    if (n < 1)
        throw Error(ErrorKind::InvalidArgument, "critic_update: empty batch");
    const double alpha = agent.alpha();

    nets::PolicySample next = nets::policy_sample(agent.policy, batch.next_obs, update_rng);
    auto [tq1, tq2] = nets::q_forward(agent.target_critic, batch.next_obs, next.action);

    CriticUpdateResult res;
    res.td_targets.resize(n);
    for (int i = 0; i < n; ++i) {
        const double qmin = std::min(tq1[i], tq2[i]);
        const double bootstrap = batch.done[i] ? 0.0 : 1.0;
        res.td_targets[i] = batch.reward[i] +
            agent.cfg.gamma * bootstrap * (qmin - alpha * next.log_prob[i]);
    }

    Matrix x = nets::concat_cols(batch.obs, batch.action);
    ndmath::ForwardCache c1, c2;
    Matrix y1 = ndmath::mlp_forward(agent.critic.q1, x, &c1);
    Matrix y2 = ndmath::mlp_forward(agent.critic.q2, x, &c2);
    res.q1_values.assign(y1.data.begin(), y1.data.end());
    res.q2_values.assign(y2.data.begin(), y2.data.end());

    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e1 = res.q1_values[i] - res.td_targets[i];
        const double e2 = res.q2_values[i] - res.td_targets[i];
        loss += 0.5 * (e1 * e1 + e2 * e2);
    }
    loss /= n;
    if (!std::isfinite(loss))
        throw Error(ErrorKind::NonFinite, "critic_update: non-finite loss, step aborted");
    res.loss = loss;

    Matrix unit_og(n, 1);
    for (int i = 0; i < n; ++i) unit_og(i, 0) = 1.0;
    res.unit_q1 = ndmath::mlp_backward(agent.critic.q1, c1, unit_og);
    res.unit_q2 = ndmath::mlp_backward(agent.critic.q2, c2, unit_og);

    std::vector<double> s1(n), s2(n);
    for (int i = 0; i < n; ++i) {
        s1[i] = (res.q1_values[i] - res.td_targets[i]) / n;
        s2[i] = (res.q2_values[i] - res.td_targets[i]) / n;
    }
    const AdamConfig ac = adam_of(agent.cfg);
    agent.opt_q1.step(agent.critic.q1, rowscaled_batch_grads(res.unit_q1, s1), ac);
    agent.opt_q2.step(agent.critic.q2, rowscaled_batch_grads(res.unit_q2, s2), ac);
    return res;
}

double actor_update(Agent& agent, const Batch& batch, Rng& update_rng,
                    std::vector<double>* log_probs_out) {
    const int n = batch.size();
    if (n < 1)
        throw Error(ErrorKind::InvalidArgument, "actor_update: empty batch");
    const double alpha = agent.alpha();
    const int d = agent.act_dim;

    nets::PolicySample cur = nets::policy_sample(agent.policy, batch.obs, update_rng);
    Matrix x = nets::concat_cols(batch.obs, cur.action);
    ndmath::ForwardCache c1, c2;
    Matrix y1 = ndmath::mlp_forward(agent.critic.q1, x, &c1);
    Matrix y2 = ndmath::mlp_forward(agent.critic.q2, x, &c2);

    double loss = 0.0;
    Matrix og1(n, 1), og2(n, 1);
    for (int i = 0; i < n; ++i) {
        const bool first = y1(i, 0) <= y2(i, 0);
        loss += alpha * cur.log_prob[i] - std::min(y1(i, 0), y2(i, 0));
        og1(i, 0) = first ? 1.0 : 0.0;
        og2(i, 0) = first ? 0.0 : 1.0;
    }
    loss /= n;
    if (!std::isfinite(loss))
        throw Error(ErrorKind::NonFinite, "actor_update: non-finite loss, step aborted");

    // d(min Q)/d action via the argmin critic's input gradients; the critics'
    // own parameter gradients are not needed here.
    Matrix din1, din2;
    (void)ndmath::mlp_backward(agent.critic.q1, c1, og1, &din1, false);
    (void)ndmath::mlp_backward(agent.critic.q2, c2, og2, &din2, false);
    const int obs_dim = agent.obs_dim;
    Matrix qgrad(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            qgrad(i, j) = din1(i, obs_dim + j) + din2(i, obs_dim + j);

    // Reparameterized head gradients: u = mean + sigma z (z pinned),
    // a = tanh(u), log pi = sum_j [-z^2/2 - log_std - log(2pi)/2
    //                              - log(1 - a^2 + eps)].
    Matrix dmean(n, d), dls(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double a = cur.action(i, j);
            const double one_m_a2 = 1.0 - a * a;
            const double dlogp_du = 2.0 * a * one_m_a2 /
                                    (one_m_a2 + nets::GaussianPolicy::kSquashEps);
            const double sigma_z = std::exp(cur.log_std(i, j)) * cur.z(i, j);
            const double dq_du = qgrad(i, j) * one_m_a2;
            dmean(i, j) = (alpha * dlogp_du - dq_du) / n;
            dls(i, j) = (alpha * (-1.0 + dlogp_du * sigma_z) - dq_du * sigma_z) / n;
        }
    }
    Matrix og = nets::policy_output_grads(cur, dmean, dls);
    fim::ScoreBatch grads = ndmath::mlp_backward(agent.policy.net, cur.cache, og);
    agent.opt_policy.step(agent.policy.net, grads.batch_grads(), adam_of(agent.cfg));

    if (log_probs_out) *log_probs_out = cur.log_prob;
    return loss;
}

void alpha_update(Agent& agent, const std::vector<double>& log_probs) {
    if (log_probs.empty()) return;
    double mean = 0.0;
    for (double lp : log_probs) mean += lp;
    mean /= static_cast<double>(log_probs.size());
    const double grad = -(mean + agent.cfg.target_entropy);
    agent.opt_alpha.step(agent.log_alpha, grad, adam_of(agent.cfg));
}

void polyak_step(Agent& agent) {
    nets::polyak_update(agent.target_critic.q1, agent.critic.q1, agent.cfg.tau);
    nets::polyak_update(agent.target_critic.q2, agent.critic.q2, agent.cfg.tau);
}

void periodic_reset(Agent& agent, Rng& reset_rng) {
    const auto& cfg = agent.cfg;
    agent.policy = nets::make_policy(agent.obs_dim, agent.act_dim, cfg.hidden_units,
                                     cfg.hidden_layers, cfg.activation, reset_rng);
    agent.critic = nets::make_critic(agent.obs_dim, agent.act_dim, cfg.hidden_units,
                                     cfg.hidden_layers, cfg.activation, reset_rng);
    agent.target_critic.q1 = agent.critic.q1;
    agent.target_critic.q2 = agent.critic.q2;
    agent.opt_policy = AdamState::like(agent.policy.net);
    agent.opt_q1 = AdamState::like(agent.critic.q1);
    agent.opt_q2 = AdamState::like(agent.critic.q2);
    agent.opt_alpha = ScalarAdam{};
}

Method method_from_name(const std::string& name) {
    if (name == "baseline") return Method::Baseline;
    if (name == "fgsf") return Method::Fgsf;
    if (name == "reset") return Method::Reset;
    if (name == "gauss") return Method::Gauss;
    throw Error(ErrorKind::Config, "unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Baseline: return "baseline";
        case Method::Fgsf: return "fgsf";
        case Method::Reset: return "reset";
        case Method::Gauss: return "gauss";
    }
    return "?";
}

Streams Streams::from_seed(uint64_t master) {
    Streams s;
    s.env = Rng::stream(master, "env");
    s.action = Rng::stream(master, "action");
    s.replay = Rng::stream(master, "replay");
    s.update = Rng::stream(master, "update");
    s.scrub = Rng::stream(master, "scrub-noise");
    s.probe = Rng::stream(master, "fim-probe");
    s.reset = Rng::stream(master, "reset-init");
    s.eval = Rng::stream(master, "eval");
    return s;
}

std::vector<std::pair<std::string, Rng*>> Streams::named() {
    return {{"env", &env},     {"action", &action}, {"replay", &replay},
            {"update", &update}, {"scrub-noise", &scrub}, {"fim-probe", &probe},
            {"reset-init", &reset}, {"eval", &eval}};
}

TrainLoop::TrainLoop(std::unique_ptr<env::Env> environment, const SacConfig& sac_cfg,
                     Method method, const fim::ScrubConfig& scrub, long reset_interval,
                     uint64_t seed)
    : env_(std::move(environment)),
      buffer_(sac_cfg.buffer_capacity),
      streams_(Streams::from_seed(seed)),
      method_(method),
      scrub_(scrub),
      reset_interval_(reset_interval) {
    scrub_.validate();
    Rng init = Rng::stream(seed, "net-init");
    agent_ = Agent::make(env_->obs_dim(), env_->action_dim(), sac_cfg, init);
    obs_ = env_->reset(streams_.env);
    if (method_ == Method::Reset && reset_interval_ < 1)
        throw Error(ErrorKind::Config, "reset method needs reset_interval >= 1");
}

LoopEvents TrainLoop::train_iteration() {
    LoopEvents ev;
    const auto& cfg = agent_.cfg;
    const int d = agent_.act_dim;

    std::vector<double> action(d);
    if (env_steps_ < cfg.warmup_steps) {
        for (int j = 0; j < d; ++j) action[j] = streams_.action.uniform(-1.0, 1.0);
    } else {
        Matrix obs_row(1, static_cast<int>(obs_.size()));
        for (size_t j = 0; j < obs_.size(); ++j) obs_row(0, static_cast<int>(j)) = obs_[j];
        nets::PolicySample s = nets::policy_sample(agent_.policy, obs_row, streams_.action);
        for (int j = 0; j < d; ++j) action[j] = s.action(0, j);
    }

    env::StepResult sr = env_->step(action);
    Transition tr;
    tr.obs = obs_;
    tr.action = action;
    tr.reward = sr.reward;
    tr.next_obs = sr.observation;
    tr.done = sr.done;
    buffer_.push(std::move(tr));

    ep_return_ += sr.reward;
    ++ep_len_;
    obs_ = sr.observation;
    ++env_steps_;

    if (sr.done) {
        last_episode_return_ = ep_return_;
        ev.episode_done = true;
        ev.episode_return = ep_return_;
        ++episodes_;
        ep_return_ = 0.0;
        ep_len_ = 0;
        obs_ = env_->reset(streams_.env);
    }

    if (env_steps_ > cfg.warmup_steps) {
        for (int r = 0; r < cfg.replay_ratio; ++r) one_update(ev);
    }
    return ev;
}

void TrainLoop::one_update(LoopEvents& ev) {
    const auto& cfg = agent_.cfg;
    Batch batch = buffer_.sample(cfg.batch_size, streams_.replay);
    CriticUpdateResult cres = critic_update(agent_, batch, streams_.update);
    std::vector<double> log_probs;
    (void)actor_update(agent_, batch, streams_.update, &log_probs);
    alpha_update(agent_, log_probs);
    polyak_step(agent_);
    ++grad_steps_;
    ++ev.updates_done;

    last_batch_ = std::move(batch);
    last_critic_ = std::move(cres);

    apply_scrub(ev);
    if (after_update) after_update(*this);
}

void TrainLoop::apply_scrub(LoopEvents& ev) {
    switch (method_) {
        case Method::Baseline:
            return;
        case Method::Fgsf: {
            if (grad_steps_ % scrub_.frequency != 0) return;
            std::string report;
            if (scrub_.target != fim::ScrubTarget::CriticOnly) {
                fim::ScoreBatch scores =
                    fim::policy_scores(agent_.policy, last_batch_->obs, streams_.scrub);
                fim::FimEstimate est = fim::estimate(scores, scrub_.estimator);
                if (!fim::fgsf_scrub(agent_.policy.net, est, scrub_, streams_.scrub, &report))
                    ++ev.scrubs_aborted;
            }
            if (scrub_.target != fim::ScrubTarget::ActorOnly) {
                const int n = last_batch_->size();
                for (auto* q : {&agent_.critic.q1, &agent_.critic.q2}) {
                    const fim::ScoreBatch& unit = (q == &agent_.critic.q1)
                        ? last_critic_->unit_q1 : last_critic_->unit_q2;
                    std::vector<double> eps(n);
                    for (int i = 0; i < n; ++i) eps[i] = streams_.scrub.normal();
                    fim::ScoreBatch scores = fim::scale_scores(unit, eps);
                    fim::FimEstimate est = fim::estimate(scores, scrub_.estimator);
                    if (!fim::fgsf_scrub(*q, est, scrub_, streams_.scrub, &report))
                        ++ev.scrubs_aborted;
                }
            }
            return;
        }
        case Method::Gauss: {
            if (grad_steps_ % scrub_.frequency != 0) return;
            if (scrub_.target != fim::ScrubTarget::CriticOnly)
                fim::gaussian_scrub(agent_.policy.net, streams_.scrub);
            if (scrub_.target != fim::ScrubTarget::ActorOnly) {
                fim::gaussian_scrub(agent_.critic.q1, streams_.scrub);
                fim::gaussian_scrub(agent_.critic.q2, streams_.scrub);
            }
            return;
        }
        case Method::Reset: {
            if (reset_interval_ >= 1 && grad_steps_ % reset_interval_ == 0)
                periodic_reset(agent_, streams_.reset);
            return;
        }
    }
}

double TrainLoop::actor_trace() {
    if (!last_batch_) return 0.0;
    fim::ScoreBatch scores =
        fim::policy_scores(agent_.policy, last_batch_->obs, streams_.probe);
    return fim::fim_trace(fim::estimate(scores, scrub_.estimator));
}

double TrainLoop::critic_trace() {
    if (!last_critic_) return 0.0;
    const int n = last_batch_->size();
    std::vector<double> eps(n);
    for (int i = 0; i < n; ++i) eps[i] = streams_.probe.normal();
    fim::ScoreBatch scores = fim::scale_scores(last_critic_->unit_q1, eps);
    return fim::fim_trace(fim::estimate(scores, scrub_.estimator));
}

} // namespace fgsf::sac
