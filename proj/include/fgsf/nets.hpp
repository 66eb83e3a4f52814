#pragma once

#include "fgsf/mlp.hpp"

#include <utility>
#include <vector>

namespace fgsf::nets {

using ndmath::Matrix;
using ndmath::Mlp;

// Squashed-Gaussian policy. One MLP maps obs -> [mean | log_std] (2 * act_dim
// outputs); log_std is clamped to [-20, 2] and actions are tanh-squashed into
// (-1, 1)^d with the usual log-det correction.
struct GaussianPolicy {
    Mlp net;
    int act_dim = 0;

    static constexpr double kLogStdMin = -20.0;
    static constexpr double kLogStdMax = 2.0;
    static constexpr double kSquashEps = 1e-6;
};

struct TwinCritic {
    Mlp q1;
    Mlp q2;
};

GaussianPolicy make_policy(int obs_dim, int act_dim, int hidden_units,
                           int hidden_layers, ndmath::Activation act, Rng& rng);
TwinCritic make_critic(int obs_dim, int act_dim, int hidden_units,
                       int hidden_layers, ndmath::Activation act, Rng& rng);

// Everything needed to differentiate through a draw: u = mean + sigma * z,
// action = tanh(u). clamp_pass is 1 where the raw log_std was inside the
// clamp (gradient passes) and 0 outside.
struct PolicySample {
    Matrix mean;        // batch x d
    Matrix log_std;     // clamped
    Matrix clamp_pass;
    Matrix z;
    Matrix pre_tanh;
    Matrix action;
    std::vector<double> log_prob;
    ndmath::ForwardCache cache;
};

PolicySample policy_sample(const GaussianPolicy& p, const Matrix& obs, Rng& rng);

// Deterministic action tanh(mean), used for evaluation.
Matrix policy_mean_action(const GaussianPolicy& p, const Matrix& obs);

// Assemble head gradients into the net's output-gradient layout
// [d/dmean | d/dlog_std * clamp_pass].
Matrix policy_output_grads(const PolicySample& s, const Matrix& dmean,
                           const Matrix& dlog_std);

Matrix concat_cols(const Matrix& a, const Matrix& b);

// Two independent scalar estimates for a batch of (obs, action) pairs.
std::pair<std::vector<double>, std::vector<double>>
q_forward(const TwinCritic& c, const Matrix& obs, const Matrix& action);

// theta_target <- tau * theta_online + (1 - tau) * theta_target.
void polyak_update(Mlp& target, const Mlp& online, double tau);

} // namespace fgsf::nets
