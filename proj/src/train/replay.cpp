#include "ugrasp/train/replay.hpp"

#include <stdexcept>

namespace ugrasp::train {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::append(Transition t) {
    std::lock_guard<std::mutex> lock(mu_);
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
    ++appended_;
}

size_t ReplayBuffer::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return items_.size();
}

int64_t ReplayBuffer::appended_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return appended_;
}

std::vector<Transition> ReplayBuffer::sample(size_t batch, rng::Stream& rs) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (items_.empty()) return {};
    std::vector<Transition> out;
    out.reserve(batch);
    for (size_t i = 0; i < batch; ++i) {
        const size_t idx = static_cast<size_t>(rs.uniform_int(0, static_cast<int>(items_.size()) - 1));
        out.push_back(items_[idx]);
    }
    return out;
}

Transition ReplayBuffer::at(size_t index) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (index >= items_.size()) throw std::out_of_range("replay index");
    return items_[index];
}

}  // namespace ugrasp::train
