#include "fgsf/replay.hpp"

#include "fgsf/error.hpp"

#include <cmath>
#include <cstring>

namespace fgsf::sac {

bool Transition::all_finite() const {
    auto ok = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return ok(obs) && ok(action) && ok(next_obs) && std::isfinite(reward);
}

void ReplayBuffer::push(Transition t) {
    if (!t.all_finite())
        throw Error(ErrorKind::NonFinite, "replay: non-finite transition rejected");
    if (storage_.size() < capacity_ && cursor_ == storage_.size()) {
        storage_.push_back(std::move(t));
    } else {
        storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
}

Batch ReplayBuffer::sample(int n, Rng& rng) const {
    // Draws are uniform with replacement, so n may exceed the fill level;
    // only an empty buffer is underfull.
    if (n <= 0 || size_ == 0)
        throw Error(ErrorKind::InvalidArgument,
                    "replay: cannot sample " + std::to_string(n) +
                    " from buffer of size " + std::to_string(size_));
    const int obs_dim = static_cast<int>(storage_[0].obs.size());
    const int act_dim = static_cast<int>(storage_[0].action.size());

    Batch b;
    b.obs = ndmath::Matrix(n, obs_dim);
    b.action = ndmath::Matrix(n, act_dim);
    b.next_obs = ndmath::Matrix(n, obs_dim);
    b.reward.resize(n);
    b.done.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& t = storage_[rng.uniform_index(size_)];
        std::memcpy(b.obs.row(i), t.obs.data(), obs_dim * sizeof(double));
        std::memcpy(b.action.row(i), t.action.data(), act_dim * sizeof(double));
        std::memcpy(b.next_obs.row(i), t.next_obs.data(), obs_dim * sizeof(double));
        b.reward[i] = t.reward;
        b.done[i] = t.done ? 1 : 0;
    }
    return b;
}

} // namespace fgsf::sac
