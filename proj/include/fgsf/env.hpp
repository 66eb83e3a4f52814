#pragma once

#include "fgsf/rng.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fgsf::env {

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
};

class Env {
public:
    virtual ~Env() = default;
    virtual std::vector<double> reset(Rng& rng) = 0;
    virtual StepResult step(const std::vector<double>& action) = 0;
    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual std::string name() const = 0;
    // Flat state snapshot for checkpointing; restore must be exact.
    virtual std::vector<double> state_blob() const = 0;
    virtual void restore_blob(const std::vector<double>& blob) = 0;
};

// theta wrapped to (-pi, pi].
double wrap_angle(double theta);

// Classic swing-up: torque u = 2*action, thetadd = (3g/(2l)) sin(theta)
// + 3u/(m l^2) with g=10, m=l=1; semi-implicit Euler at dt=0.05; |thetadot|
// clamped to 8; reward -(wrap(theta)^2 + 0.1 thetadot^2 + 0.001 u^2) on the
// pre-step state; episodes end after 200 steps.
class PendulumEnv : public Env {
public:
    static constexpr double kGravity = 10.0;
    static constexpr double kMass = 1.0;
    static constexpr double kLength = 1.0;
    static constexpr double kDt = 0.05;
    static constexpr double kMaxTorque = 2.0;
    static constexpr double kMaxSpeed = 8.0;
    static constexpr int kHorizon = 200;

    std::vector<double> reset(Rng& rng) override;
    StepResult step(const std::vector<double>& action) override;
    int obs_dim() const override { return 3; }
    int action_dim() const override { return 1; }
    std::string name() const override { return "pendulum"; }
    std::vector<double> state_blob() const override;
    void restore_blob(const std::vector<double>& blob) override;

    double theta() const { return theta_; }
    double theta_dot() const { return theta_dot_; }
    void set_state(double theta, double theta_dot);

private:
    std::vector<double> observe() const;

    double theta_ = 0.0;
    double theta_dot_ = 0.0;
    int steps_ = 0;
};

// Point agent in the unit box chasing a fixed goal that reflects to the
// opposite quadrant once, after `shift_episode` episodes. Built to make the
// early replay data misleading within a small step budget.
class ShiftingGoalEnv : public Env {
public:
    static constexpr double kStepScale = 0.05;
    static constexpr int kHorizon = 100;

    explicit ShiftingGoalEnv(int shift_episode = 50) : shift_episode_(shift_episode) {}

    std::vector<double> reset(Rng& rng) override;
    StepResult step(const std::vector<double>& action) override;
    int obs_dim() const override { return 4; }
    int action_dim() const override { return 2; }
    std::string name() const override { return "shifting_goal"; }
    std::vector<double> state_blob() const override;
    void restore_blob(const std::vector<double>& blob) override;

    const double* goal() const { return goal_; }
    long episodes_elapsed() const { return episodes_; }

private:
    std::vector<double> observe() const;

    int shift_episode_;
    double pos_[2] = {0.0, 0.0};
    double goal_[2] = {0.0, 0.0};
    bool goal_drawn_ = false;
    bool shifted_ = false;
    long episodes_ = 0;
    int steps_ = 0;
};

// Environment by config name: "pendulum" or "shifting_goal".
std::unique_ptr<Env> make_env(const std::string& name);

} // namespace fgsf::env
