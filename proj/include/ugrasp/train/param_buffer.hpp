#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "ugrasp/train/snapshot.hpp"

namespace ugrasp::train {

// One member's published parameters. Immutable once published.
struct MemberSnapshot {
    MemberParams params;
    uint64_t version = 0;     // global, strictly increasing across publishes
    int64_t member_step = 0;  // member update steps at publish time
    uint64_t checksum = 0;
};

// Latest-wins slot per member with atomic snapshot swap. Producers are the
// learner workers (one per member); the acting process is the single reader.
// Checksums are computed on publish and verified on read, so a reader can
// never act on a half-written snapshot.
class ParameterBuffer {
public:
    explicit ParameterBuffer(int n_members);

    void publish(int member_index, MemberParams params, int64_t member_step);

    // Verified copy of the member's latest snapshot pointer.
    std::shared_ptr<const MemberSnapshot> read_member(int member_index) const;
    std::vector<std::shared_ptr<const MemberSnapshot>> read_all() const;

    uint64_t latest_version() const;

private:
    mutable std::mutex mu_;
    std::vector<std::shared_ptr<const MemberSnapshot>> slots_;
    uint64_t version_counter_ = 0;
};

}  // namespace ugrasp::train
