#include "fgsf/env.hpp"

#include "fgsf/error.hpp"

#include <algorithm>
#include <cmath>

namespace fgsf::env {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double wrap_angle(double theta) {
    double w = theta - 2.0 * kPi * std::floor((theta + kPi) / (2.0 * kPi));
    if (w <= -kPi) w = kPi; // (-pi, pi]
    return w;
}

std::vector<double> PendulumEnv::observe() const {
    return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

std::vector<double> PendulumEnv::reset(Rng& rng) {
    theta_ = rng.uniform(-kPi, kPi);
    theta_dot_ = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    return observe();
}

void PendulumEnv::set_state(double theta, double theta_dot) {
    theta_ = theta;
    theta_dot_ = theta_dot;
    steps_ = 0;
}

StepResult PendulumEnv::step(const std::vector<double>& action) {
    if (action.size() != 1 || !std::isfinite(action[0]))
        throw Error(ErrorKind::InvalidArgument, "pendulum: non-finite or malformed action");
    const double a = std::clamp(action[0], -1.0, 1.0);
    const double u = kMaxTorque * a;

    const double cost = wrap_angle(theta_) * wrap_angle(theta_) +
                        0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

    const double thetadd = (3.0 * kGravity / (2.0 * kLength)) * std::sin(theta_) +
                           3.0 * u / (kMass * kLength * kLength);
    theta_dot_ = std::clamp(theta_dot_ + thetadd * kDt, -kMaxSpeed, kMaxSpeed);
    theta_ = wrap_angle(theta_ + theta_dot_ * kDt);
    ++steps_;

    StepResult r;
    r.observation = observe();
    r.reward = -cost;
    r.done = steps_ >= kHorizon;
    return r;
}

std::vector<double> PendulumEnv::state_blob() const {
    return {theta_, theta_dot_, static_cast<double>(steps_)};
}

void PendulumEnv::restore_blob(const std::vector<double>& blob) {
    if (blob.size() != 3)
        throw Error(ErrorKind::TruncatedPayload, "pendulum: bad state blob");
    theta_ = blob[0];
    theta_dot_ = blob[1];
    steps_ = static_cast<int>(blob[2]);
}

std::vector<double> ShiftingGoalEnv::observe() const {
    return {pos_[0], pos_[1], goal_[0], goal_[1]};
}

std::vector<double> ShiftingGoalEnv::reset(Rng& rng) {
    if (!goal_drawn_) {
        goal_[0] = rng.uniform(0.3, 0.9);
        goal_[1] = rng.uniform(0.3, 0.9);
        goal_drawn_ = true;
    }
    if (!shifted_ && episodes_ >= shift_episode_) {
        goal_[0] = -goal_[0];
        goal_[1] = -goal_[1];
        shifted_ = true;
    }
    pos_[0] = rng.uniform(-1.0, 1.0);
    pos_[1] = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    return observe();
}

StepResult ShiftingGoalEnv::step(const std::vector<double>& action) {
    if (action.size() != 2)
        throw Error(ErrorKind::InvalidArgument, "shifting_goal: action must be 2-d");
    for (int i = 0; i < 2; ++i) {
        const double a = std::clamp(action[i], -1.0, 1.0);
        pos_[i] = std::clamp(pos_[i] + kStepScale * a, -1.0, 1.0);
    }
    const double dx = pos_[0] - goal_[0];
    const double dy = pos_[1] - goal_[1];
    ++steps_;

    StepResult r;
    r.observation = observe();
    r.reward = -std::sqrt(dx * dx + dy * dy);
    r.done = steps_ >= kHorizon;
    if (r.done) ++episodes_;
    return r;
}

std::vector<double> ShiftingGoalEnv::state_blob() const {
    return {pos_[0], pos_[1], goal_[0], goal_[1],
            goal_drawn_ ? 1.0 : 0.0, shifted_ ? 1.0 : 0.0,
            static_cast<double>(episodes_), static_cast<double>(steps_),
            static_cast<double>(shift_episode_)};
}

void ShiftingGoalEnv::restore_blob(const std::vector<double>& blob) {
    if (blob.size() != 9)
        throw Error(ErrorKind::TruncatedPayload, "shifting_goal: bad state blob");
    pos_[0] = blob[0];
    pos_[1] = blob[1];
    goal_[0] = blob[2];
    goal_[1] = blob[3];
    goal_drawn_ = blob[4] != 0.0;
    shifted_ = blob[5] != 0.0;
    episodes_ = static_cast<long>(blob[6]);
    steps_ = static_cast<int>(blob[7]);
    shift_episode_ = static_cast<int>(blob[8]);
}

std::unique_ptr<Env> make_env(const std::string& name) {
    if (name == "pendulum") return std::make_unique<PendulumEnv>();
    if (name == "shifting_goal") return std::make_unique<ShiftingGoalEnv>();
    throw Error(ErrorKind::Config, "unknown environment: " + name);
}

} // namespace fgsf::env
