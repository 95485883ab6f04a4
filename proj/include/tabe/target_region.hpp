#pragma once

#include "tabe/box.hpp"
#include "tabe/types.hpp"

#include <algorithm>
#include <vector>

namespace tabe {

/// How the reference nearness is summarised over the visible pixels.
enum class ReferenceStatistic { Mean, Median };

struct TargetRegion {
    int frame_index = 0;
    Mask mask;
};

namespace target_detail {

inline double summarize(std::vector<double> values, ReferenceStatistic stat) {
    if (stat == ReferenceStatistic::Mean) return stable_mean(values);
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double med = values[mid];
    if (values.size() % 2 == 0) {
        std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid) - 1, values.end());
        med = 0.5 * (med + values[mid - 1]);
    }
    return med;
}

} // namespace target_detail

/// Pixels where the outpainter may generate: nearer than the object's reference nearness,
/// plus the visible mask itself, all restricted to the image-clamped amodal box.
inline TargetRegion build_target_region(const Mask& visible, const NearnessMap& nearness, const AmodalBox& box,
                                        ReferenceStatistic stat = ReferenceStatistic::Mean) {
    require_same_size(visible.width(), visible.height(), nearness.width(), nearness.height(), "target region");
    const PixelRect rect = clamp_to_image(box, visible.width(), visible.height());
    if (rect.empty()) throw ValidationError("target region: box lies entirely outside the image");

    std::vector<double> reference;
    bool intersects = false;
    for (int y = 0; y < visible.height(); ++y)
        for (int x = 0; x < visible.width(); ++x)
            if (visible(x, y)) {
                reference.push_back(nearness(x, y));
                intersects = intersects || rect.contains(x, y);
            }
    if (!reference.empty() && !intersects) throw ValidationError("target region: visible mask does not meet the box");
    if (reference.empty())
        for (int y = rect.y0; y < rect.y1; ++y)
            for (int x = rect.x0; x < rect.x1; ++x) reference.push_back(nearness(x, y));
    const double mu = target_detail::summarize(std::move(reference), stat);

    TargetRegion out{box.frame_index, Mask(visible.width(), visible.height())};
    for (int y = rect.y0; y < rect.y1; ++y)
        for (int x = rect.x0; x < rect.x1; ++x)
            if (visible(x, y) || nearness(x, y) > mu) out.mask.set(x, y);
    return out;
}

} // namespace tabe
