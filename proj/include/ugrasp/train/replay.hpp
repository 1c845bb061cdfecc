#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "ugrasp/rng.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::train {

// One online sample. Observations are shared immutable values; transitions
// from the same scene state alias the same observation.
struct Transition {
    std::shared_ptr<const sim::Observation> obs;
    int row = 0;
    int col = 0;
    double alpha = 0.0;
    double beta = 0.0;
    int reward = 0;
    int64_t step_index = 0;  // ensemble update steps when collected
    uint64_t scene_id = 0;
};

// Bounded FIFO shared between the acting process (producer) and the learner
// workers (sampling consumers). Appending at capacity drops the oldest
// entry; stored transitions are never mutated.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void append(Transition t);
    size_t size() const;
    int64_t appended_count() const;

    // Uniform with replacement; deterministic given the caller's stream.
    std::vector<Transition> sample(size_t batch, rng::Stream& rs) const;

    Transition at(size_t index) const;  // oldest-first indexing

private:
    mutable std::mutex mu_;
    std::deque<Transition> items_;
    size_t capacity_;
    int64_t appended_ = 0;
};

}  // namespace ugrasp::train
