#pragma once

#include "tabe/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabe {

enum class BoxProvenance { Observed, Interpolated, Extrapolated, Grown };

inline const char* to_string(BoxProvenance p) {
    switch (p) {
    case BoxProvenance::Observed: return "observed";
    case BoxProvenance::Interpolated: return "interpolated";
    case BoxProvenance::Extrapolated: return "extrapolated";
    case BoxProvenance::Grown: return "grown";
    }
    return "?";
}

inline BoxProvenance parse_provenance(const std::string& s) {
    if (s == "observed") return BoxProvenance::Observed;
    if (s == "interpolated") return BoxProvenance::Interpolated;
    if (s == "extrapolated") return BoxProvenance::Extrapolated;
    if (s == "grown") return BoxProvenance::Grown;
    throw ValidationError("unknown box provenance: " + s);
}

/// Axis-aligned box in real pixel coordinates, half-open: pixel (x,y) occupies [x,x+1)×[y,y+1).
/// Coordinates may lie outside the image; clamping happens only when a box is consumed.
struct AmodalBox {
    int frame_index = 0;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    BoxProvenance provenance = BoxProvenance::Observed;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool valid() const { return width() > 0 && height() > 0; }
};

inline void to_json(nlohmann::json& j, const AmodalBox& b) {
    j = {{"frame", b.frame_index}, {"x0", b.x0}, {"y0", b.y0},
         {"x1", b.x1},             {"y1", b.y1}, {"provenance", to_string(b.provenance)}};
}

inline void from_json(const nlohmann::json& j, AmodalBox& b) {
    b.frame_index = j.at("frame").get<int>();
    b.x0 = j.at("x0").get<double>();
    b.y0 = j.at("y0").get<double>();
    b.x1 = j.at("x1").get<double>();
    b.y1 = j.at("y1").get<double>();
    b.provenance = parse_provenance(j.at("provenance").get<std::string>());
    if (!b.valid()) throw ValidationError("box for frame " + std::to_string(b.frame_index) + " has no extent");
}

/// True when the box has no overlap with the image rectangle [0,W)×[0,H).
inline bool is_outside_image(const AmodalBox& b, int width, int height) {
    return b.x1 <= 0.0 || b.y1 <= 0.0 || b.x0 >= width || b.y0 >= height;
}

/// Integer pixel range covered by the box after clamping to the image; rounded outward.
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // half-open
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

inline PixelRect clamp_to_image(const AmodalBox& b, int width, int height) {
    PixelRect r;
    r.x0 = std::clamp(static_cast<int>(std::floor(b.x0)), 0, width);
    r.y0 = std::clamp(static_cast<int>(std::floor(b.y0)), 0, height);
    r.x1 = std::clamp(static_cast<int>(std::ceil(b.x1)), 0, width);
    r.y1 = std::clamp(static_cast<int>(std::ceil(b.y1)), 0, height);
    return r;
}

/// Tight box around the true pixels; nullopt for an empty mask.
inline std::optional<AmodalBox> observed_box(const Mask& mask, int frame_index = 0) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return AmodalBox{frame_index, double(x0), double(y0), double(x1 + 1), double(y1 + 1), BoxProvenance::Observed};
}

namespace box_detail {

inline AmodalBox lerp(const AmodalBox& a, const AmodalBox& b, double s) {
    AmodalBox out;
    out.x0 = a.x0 + s * (b.x0 - a.x0);
    out.y0 = a.y0 + s * (b.y0 - a.y0);
    out.x1 = a.x1 + s * (b.x1 - a.x1);
    out.y1 = a.y1 + s * (b.y1 - a.y1);
    return out;
}

// Constant-velocity extrapolation can collapse a shrinking box; keep at least one pixel of extent.
inline void ensure_extent(AmodalBox& b) {
    if (b.x1 - b.x0 < 1.0) {
        const double c = 0.5 * (b.x0 + b.x1);
        b.x0 = c - 0.5;
        b.x1 = c + 0.5;
    }
    if (b.y1 - b.y0 < 1.0) {
        const double c = 0.5 * (b.y0 + b.y1);
        b.y0 = c - 0.5;
        b.y1 = c + 0.5;
    }
}

} // namespace box_detail

/// Fills frames without an observed box: linear interpolation between observed neighbours,
/// constant-velocity extrapolation from the two nearest observed boxes at either end
/// (copy when only one exists). Extrapolated boxes are not clamped to the image.
inline std::vector<AmodalBox> fill_missing_boxes(const std::vector<std::optional<AmodalBox>>& boxes,
                                                 const VideoGeometry& geometry) {
    geometry.validate();
    if (static_cast<int>(boxes.size()) != geometry.frame_count)
        throw ValidationError("box list length does not match frame count");
    std::vector<int> observed;
    for (int i = 0; i < geometry.frame_count; ++i)
        if (boxes[static_cast<std::size_t>(i)]) observed.push_back(i);
    if (observed.empty()) throw ValidationError("cannot fill boxes: no frame has an observed box");

    std::vector<AmodalBox> out(boxes.size());
    auto at = [&](int i) -> const AmodalBox& { return *boxes[static_cast<std::size_t>(i)]; };

    for (int i : observed) {
        out[static_cast<std::size_t>(i)] = at(i);
        out[static_cast<std::size_t>(i)].frame_index = i;
    }
    for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
        const int a = observed[k];
        const int b = observed[k + 1];
        for (int i = a + 1; i < b; ++i) {
            AmodalBox fill = box_detail::lerp(at(a), at(b), double(i - a) / double(b - a));
            fill.frame_index = i;
            fill.provenance = BoxProvenance::Interpolated;
            out[static_cast<std::size_t>(i)] = fill;
        }
    }

    auto extrapolate = [&](int anchor, int other, int i) {
        AmodalBox fill = at(anchor);
        if (anchor != other) fill = box_detail::lerp(at(anchor), at(other), double(i - anchor) / double(other - anchor));
        box_detail::ensure_extent(fill);
        fill.frame_index = i;
        fill.provenance = BoxProvenance::Extrapolated;
        return fill;
    };
    const int first = observed.front();
    const int second = observed.size() > 1 ? observed[1] : first;
    for (int i = 0; i < first; ++i) out[static_cast<std::size_t>(i)] = extrapolate(first, second, i);
    const int last = observed.back();
    const int before_last = observed.size() > 1 ? observed[observed.size() - 2] : last;
    for (int i = last + 1; i < geometry.frame_count; ++i)
        out[static_cast<std::size_t>(i)] = extrapolate(last, before_last, i);
    return out;
}

/// Scales the box uniformly about its centre so its area reaches `reference_area`. Never shrinks.
inline AmodalBox grow_to_area(const AmodalBox& box, double reference_area) {
    if (!(reference_area > 0.0)) throw ValidationError("reference area must be positive");
    if (!box.valid()) throw ValidationError("cannot grow a box without extent");
    if (box.area() >= reference_area) return box;
    const double s = std::sqrt(reference_area / box.area());
    const Vec2 c = box.center();
    AmodalBox out = box;
    out.x0 = c.x - 0.5 * s * box.width();
    out.x1 = c.x + 0.5 * s * box.width();
    out.y0 = c.y - 0.5 * s * box.height();
    out.y1 = c.y + 0.5 * s * box.height();
    out.provenance = BoxProvenance::Grown;
    return out;
}

/// Scales width and height by (1 + percent/100) about the centre.
inline AmodalBox adjust_box(const AmodalBox& box, double expansion_percent) {
    if (!(expansion_percent > -100.0)) throw ValidationError("expansion percent must exceed -100");
    const double s = 1.0 + expansion_percent / 100.0;
    const Vec2 c = box.center();
    AmodalBox out = box;
    out.x0 = c.x - 0.5 * s * box.width();
    out.x1 = c.x + 0.5 * s * box.width();
    out.y0 = c.y - 0.5 * s * box.height();
    out.y1 = c.y + 0.5 * s * box.height();
    if (!out.valid()) throw ValidationError("adjusted box has no extent");
    return out;
}

} // namespace tabe
