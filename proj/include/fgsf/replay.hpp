#pragma once

#include "fgsf/matrix.hpp"
#include "fgsf/rng.hpp"

#include <cstdint>
#include <vector>

namespace fgsf::sac {

struct Transition {
    std::vector<double> obs;
    std::vector<double> action;
    double reward = 0.0;
    std::vector<double> next_obs;
    bool done = false;

    bool all_finite() const;
};

struct Batch {
    ndmath::Matrix obs;
    ndmath::Matrix action;
    std::vector<double> reward;
    ndmath::Matrix next_obs;
    std::vector<uint8_t> done;

    int size() const { return obs.rows; }
};

// Fixed-capacity ring; once full, pushes overwrite the oldest entry.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity = 100000) : capacity_(capacity) {}

    void push(Transition t);
    // n uniform-with-replacement draws from the valid region.
    Batch sample(int n, Rng& rng) const;

    size_t size() const { return size_; }
    size_t capacity() const { return capacity_; }
    size_t write_cursor() const { return cursor_; }
    const Transition& at(size_t i) const { return storage_[i]; }

    // Checkpoint access.
    std::vector<Transition>& storage() { return storage_; }
    const std::vector<Transition>& storage() const { return storage_; }
    void restore_counters(size_t size, size_t cursor) { size_ = size; cursor_ = cursor; }

private:
    size_t capacity_;
    std::vector<Transition> storage_;
    size_t cursor_ = 0;
    size_t size_ = 0;
};

} // namespace fgsf::sac
