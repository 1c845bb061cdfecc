#include "ugrasp/actor/explore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ugrasp/actor/actor.hpp"

namespace ugrasp::actor {

std::string to_string(UncertaintyKind k) {
    switch (k) {
        case UncertaintyKind::epistemic: return "epi";
        case UncertaintyKind::aleatoric: return "ale";
        case UncertaintyKind::total: return "all";
        case UncertaintyKind::none: return "none";
    }
    return "none";
}

UncertaintyKind uncertainty_kind_from_string(const std::string& s) {
    if (s == "epi" || s == "epistemic") return UncertaintyKind::epistemic;
    if (s == "ale" || s == "aleatoric") return UncertaintyKind::aleatoric;
    if (s == "all" || s == "total") return UncertaintyKind::total;
    if (s == "none") return UncertaintyKind::none;
    throw std::invalid_argument("unknown uncertainty kind: " + s);
}

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::cosine_adaptive ? "cosine" : "fixed";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "fixed") return ScheduleKind::fixed;
    if (s == "cosine" || s == "cosine_adaptive" || s == "adaptive") return ScheduleKind::cosine_adaptive;
    throw std::invalid_argument("unknown schedule: " + s);
}

double delta_schedule(const UcbConfig& config, int64_t t) {
    if (t < 0) throw std::invalid_argument("negative step");
    if (config.schedule == ScheduleKind::fixed) return config.delta;
    if (config.horizon < 1) throw std::invalid_argument("cosine schedule needs horizon >= 1");
    const double frac = static_cast<double>(std::min(t, config.horizon)) /
                        static_cast<double>(config.horizon);
    return 0.5 * config.delta * (1.0 + std::cos(std::numbers::pi * frac));
}

Grid ucb_map(const Grid& q_mean, const critic::CriticMaps& stats, const UcbConfig& config,
             int64_t t) {
    if (config.kind == UncertaintyKind::none) return q_mean;
    const double delta = delta_schedule(config, t);
    const Grid* v = nullptr;
    switch (config.kind) {
        case UncertaintyKind::epistemic: v = &stats.v_epi; break;
        case UncertaintyKind::aleatoric: v = &stats.v_ale; break;
        case UncertaintyKind::total: v = &stats.v_all; break;
        case UncertaintyKind::none: break;
    }
    if (v->rows() != q_mean.rows() || v->cols() != q_mean.cols())
        throw std::invalid_argument("map shape mismatch");
    Grid out = q_mean;
    for (size_t i = 0; i < out.size(); ++i) {
        const double bonus = config.on_std ? std::sqrt(std::max(0.0, v->at_index(i)))
                                           : v->at_index(i);
        out.at_index(i) += delta * bonus;
    }
    return out;
}

PixelSelection select_pixel(const Grid& ucb, const MaskGrid& mask, const Grid3& action_mean,
                            const sim::Observation& obs) {
    if (ucb.rows() != mask.rows() || ucb.cols() != mask.cols())
        throw std::invalid_argument("mask shape mismatch");
    int best_r = -1, best_c = -1;
    double best = 0.0;
    for (int r = 0; r < ucb.rows(); ++r) {
        for (int c = 0; c < ucb.cols(); ++c) {
            if (!mask(r, c)) continue;
            // strict > keeps the lowest row-major index on ties
            if (best_r < 0 || ucb(r, c) > best) {
                best = ucb(r, c);
                best_r = r;
                best_c = c;
            }
        }
    }
    if (best_r < 0) throw std::runtime_error("no valid pixel to select");

    PixelSelection sel;
    sel.row = best_r;
    sel.col = best_c;
    sel.ucb_value = best;
    sel.action.row = best_r;
    sel.action.col = best_c;
    sel.action.alpha = std::clamp(action_mean(best_r, best_c, 0), -kActionBound, kActionBound);
    sel.action.beta = std::clamp(action_mean(best_r, best_c, 1), -kActionBound, kActionBound);
    sel.grasp_depth = obs.height(best_r, best_c);
    return sel;
}

}  // namespace ugrasp::actor
