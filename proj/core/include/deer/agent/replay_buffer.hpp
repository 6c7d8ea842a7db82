#pragma once

#include <cstddef>
#include <vector>

#include "deer/agent/sac.hpp"

namespace deer::agent {

/// (h_t, a_t, r_t, h_{t+1}, done). `action` is in the squashed [-1, 1] space.
struct ReplayEntry {
    Vector obs;
    Vector action;
    double reward = 0.0;
    Vector next_obs;
    bool done = false;
};

/// Fixed-capacity FIFO ring with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(ReplayEntry entry);
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    const ReplayEntry& at(std::size_t i) const { return entries_.at(i); }
    /// Oldest entry still stored.
    const ReplayEntry& oldest() const;

    SacBatch sample(int batch_size, nn::Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<ReplayEntry> entries_;
};

}  // namespace deer::agent
