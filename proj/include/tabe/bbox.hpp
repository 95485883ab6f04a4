#pragma once

#include "tabe/box.hpp"
#include "tabe/occlusion.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace tabe {

struct BoxConfig {
    /// Relative area drop (vs. the largest recent unoccluded observed box) that triggers growth.
    double area_drop_fraction = 0.25;
    /// Number of preceding frames searched for unoccluded observed boxes.
    int window = 5;
    /// Final expansion (+) or contraction (−) applied to every box, in percent.
    double expansion_percent = 0.0;

    void validate() const {
        if (!(area_drop_fraction >= 0.0 && area_drop_fraction < 1.0))
            throw ConfigError("area drop fraction must lie in [0,1)");
        if (window < 1) throw ConfigError("bbox window must be >= 1 frame");
        if (!(expansion_percent > -100.0)) throw ConfigError("bbox expansion must exceed -100%");
    }
};

/// Grows an occluded frame's box about its centre until it matches the reference area.
inline AmodalBox grow_for_occlusion(const AmodalBox& box, const OcclusionVerdict& verdict, double reference_area) {
    if (verdict.label != OcclusionLabel::Occluded)
        throw ValidationError("grow_for_occlusion requires an occluded frame (frame " +
                              std::to_string(verdict.frame_index) + ")");
    return grow_to_area(box, reference_area);
}

inline std::vector<std::optional<AmodalBox>> observed_boxes(const MaskSequence& visible) {
    std::vector<std::optional<AmodalBox>> out;
    out.reserve(visible.size());
    for (std::size_t i = 0; i < visible.size(); ++i) out.push_back(observed_box(visible[i], static_cast<int>(i)));
    return out;
}

/// Full box estimate for a sequence: observed boxes, gap filling, area-preserving growth on
/// occluded frames whose box shrank past the configured drop, then the expansion adjustment.
///
/// The reference area is the most recent unoccluded observed box, or the query frame's box before any.
inline std::vector<AmodalBox> estimate_amodal_boxes(const MaskSequence& visible,
                                                    const std::vector<OcclusionVerdict>& verdicts,
                                                    const BoxConfig& config) {
    config.validate();
    if (visible.empty()) throw ValidationError("estimate_amodal_boxes: empty sequence");
    if (verdicts.size() != visible.size()) throw ValidationError("estimate_amodal_boxes: sequence lengths differ");
    const VideoGeometry geometry{visible[0].width(), visible[0].height(), static_cast<int>(visible.size())};
    const auto observed = observed_boxes(visible);
    auto boxes = fill_missing_boxes(observed, geometry);

    std::optional<double> reference_area;
    if (observed[0]) reference_area = observed[0]->area();
    else
        for (const auto& b : observed)
            if (b) {
                reference_area = b->area();
                break;
            }

    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& verdict = verdicts[i];
        if (verdict.label == OcclusionLabel::Unoccluded && observed[i]) {
            reference_area = observed[i]->area();
            continue;
        }
        if (verdict.label != OcclusionLabel::Occluded) continue;

        double recent_max = 0.0;
        const std::size_t lo = i >= static_cast<std::size_t>(config.window) ? i - config.window : 0;
        for (std::size_t k = lo; k < i; ++k)
            if (verdicts[k].label == OcclusionLabel::Unoccluded && observed[k])
                recent_max = std::max(recent_max, observed[k]->area());
        if (recent_max == 0.0) recent_max = *reference_area;

        if (boxes[i].area() < (1.0 - config.area_drop_fraction) * recent_max)
            boxes[i] = grow_for_occlusion(boxes[i], verdict, *reference_area);
    }

    if (config.expansion_percent != 0.0)
        for (auto& b : boxes) b = adjust_box(b, config.expansion_percent);
    return boxes;
}

} // namespace tabe
