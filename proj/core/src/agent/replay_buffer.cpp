#include "deer/agent/replay_buffer.hpp"

#include <random>
#include <stdexcept>

namespace deer::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
    entries_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(ReplayEntry entry) {
    if (!entries_.empty()) {
        const auto& ref = entries_.front();
        nn::require_shape(entry.obs.size() == ref.obs.size() && entry.next_obs.size() == ref.next_obs.size() &&
                              entry.action.size() == ref.action.size(),
                          "replay buffer: entry shape differs from stored entries");
    }
    if (entries_.size() < capacity_) {
        entries_.push_back(std::move(entry));
    } else {
        entries_[next_] = std::move(entry);
    }
    next_ = (next_ + 1) % capacity_;
}

const ReplayEntry& ReplayBuffer::oldest() const {
    if (entries_.empty()) throw std::out_of_range("replay buffer is empty");
    return entries_.size() < capacity_ ? entries_.front() : entries_[next_];
}

SacBatch ReplayBuffer::sample(int batch_size, nn::Rng& rng) const {
    if (entries_.empty()) throw std::logic_error("replay buffer: cannot sample from an empty buffer");
    if (batch_size <= 0) throw std::invalid_argument("replay buffer: batch size must be positive");
    const auto& ref = entries_.front();
    SacBatch b;
    b.obs.resize(ref.obs.size(), batch_size);
    b.actions.resize(ref.action.size(), batch_size);
    b.rewards.resize(batch_size);
    b.next_obs.resize(ref.next_obs.size(), batch_size);
    b.dones.resize(batch_size);
    std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 1);
    for (int j = 0; j < batch_size; ++j) {
        const auto& e = entries_[pick(rng)];
        b.obs.col(j) = e.obs;
        b.actions.col(j) = e.action;
        b.rewards(j) = e.reward;
        b.next_obs.col(j) = e.next_obs;
        b.dones(j) = e.done ? 1.0 : 0.0;
    }
    return b;
}

}  // namespace deer::agent
