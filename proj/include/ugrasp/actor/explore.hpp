#pragma once

#include <cstdint>
#include <string>

#include "ugrasp/critic/ensemble.hpp"
#include "ugrasp/grid.hpp"
#include "ugrasp/sim/grasp.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::actor {

enum class UncertaintyKind { epistemic, aleatoric, total, none };
enum class ScheduleKind { fixed, cosine_adaptive };

std::string to_string(UncertaintyKind k);
UncertaintyKind uncertainty_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

struct UcbConfig {
    double delta = 1.0;  // UCB ratio
    UncertaintyKind kind = UncertaintyKind::epistemic;
    ScheduleKind schedule = ScheduleKind::fixed;
    int64_t horizon = 3000;  // T, cosine decay steps
    bool on_std = false;     // add sqrt(V) instead of V (off: the map itself)
};

// fixed -> delta; cosine_adaptive -> 0.5 * delta * (1 + cos(pi * min(t,T)/T)),
// so the ratio decays from delta at t=0 to exactly 0 at t>=T.
double delta_schedule(const UcbConfig& config, int64_t t);

// Q_UCB = q_mean + delta(t) * V with V selected by the uncertainty kind.
Grid ucb_map(const Grid& q_mean, const critic::CriticMaps& stats, const UcbConfig& config,
             int64_t t);

struct PixelSelection {
    int row = 0;
    int col = 0;
    sim::GraspAction action;
    double ucb_value = 0.0;
    double grasp_depth = 0.0;  // observed height at the pixel
};

// Masked argmax with deterministic tie-breaking (lowest row-major index). The
// returned action carries the mean action at the winning pixel, clamped to
// the action bounds. Throws when no pixel is valid.
PixelSelection select_pixel(const Grid& ucb, const MaskGrid& mask, const Grid3& action_mean,
                            const sim::Observation& obs);

}  // namespace ugrasp::actor
