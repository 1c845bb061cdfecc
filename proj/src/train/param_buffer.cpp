#include "ugrasp/train/param_buffer.hpp"

#include <stdexcept>

namespace ugrasp::train {

ParameterBuffer::ParameterBuffer(int n_members) : slots_(static_cast<size_t>(n_members)) {
    if (n_members < 1) throw std::invalid_argument("need at least one member");
}

void ParameterBuffer::publish(int member_index, MemberParams params, int64_t member_step) {
    auto snap = std::make_shared<MemberSnapshot>();
    snap->params = std::move(params);
    snap->member_step = member_step;
    snap->checksum = member_checksum(snap->params);
    std::lock_guard<std::mutex> lock(mu_);
    snap->version = ++version_counter_;
    slots_[static_cast<size_t>(member_index)] = std::move(snap);
}

std::shared_ptr<const MemberSnapshot> ParameterBuffer::read_member(int member_index) const {
    std::shared_ptr<const MemberSnapshot> snap;
    {
        std::lock_guard<std::mutex> lock(mu_);
        snap = slots_[static_cast<size_t>(member_index)];
    }
    if (!snap) return nullptr;
    if (member_checksum(snap->params) != snap->checksum)
        throw std::runtime_error("parameter snapshot checksum mismatch");
    return snap;
}

std::vector<std::shared_ptr<const MemberSnapshot>> ParameterBuffer::read_all() const {
    std::vector<std::shared_ptr<const MemberSnapshot>> out(slots_.size());
    {
        std::lock_guard<std::mutex> lock(mu_);
        out = slots_;
    }
    for (const auto& snap : out) {
        if (snap && member_checksum(snap->params) != snap->checksum)
            throw std::runtime_error("parameter snapshot checksum mismatch");
    }
    return out;
}

uint64_t ParameterBuffer::latest_version() const {
    std::lock_guard<std::mutex> lock(mu_);
    return version_counter_;
}

}  // namespace ugrasp::train
