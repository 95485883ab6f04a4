#pragma once

#include "tabe/box.hpp"
#include "tabe/types.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabe {

enum class Connectivity { Four = 4, Eight = 8 };

struct OcclusionConfig {
    /// Threshold on the outward nearness derivative (after normalisation when enabled).
    double derivative_threshold = 0.05;
    /// Verdict threshold on f_occ: Unoccluded below, Occluded at or above.
    double occlusion_fraction_threshold = 0.2;
    double probe_distance = 2.0;
    Connectivity boundary_connectivity = Connectivity::Four;
    /// Min-max normalise each frame's nearness to [0,1] before differentiating.
    bool normalize_nearness = true;

    void validate() const {
        if (!(derivative_threshold >= 0.0)) throw ConfigError("derivative threshold t must be >= 0");
        if (!(occlusion_fraction_threshold > 0.0 && occlusion_fraction_threshold < 1.0))
            throw ConfigError("occlusion fraction threshold tau must lie in (0,1)");
        if (!(probe_distance >= 1.0)) throw ConfigError("probe distance must be >= 1 pixel");
    }
};

struct BoundarySample {
    Pixel position;
    Vec2 outward_normal;
    double arc_weight = 1.0;
    double directional_derivative = 0.0;
    /// False when the derivative probe falls outside the image; such samples never count as occlusion.
    bool probe_in_image = true;
    bool flag = false;
};

enum class OcclusionLabel { Unoccluded, Occluded, OutOfFrame };

inline const char* to_string(OcclusionLabel l) {
    switch (l) {
    case OcclusionLabel::Unoccluded: return "unoccluded";
    case OcclusionLabel::Occluded: return "occluded";
    case OcclusionLabel::OutOfFrame: return "out_of_frame";
    }
    return "?";
}

inline OcclusionLabel parse_label(const std::string& s) {
    if (s == "unoccluded") return OcclusionLabel::Unoccluded;
    if (s == "occluded") return OcclusionLabel::Occluded;
    if (s == "out_of_frame") return OcclusionLabel::OutOfFrame;
    throw ValidationError("unknown occlusion label: " + s);
}

struct OcclusionVerdict {
    int frame_index = 0;
    std::optional<double> f_occ; ///< nullopt when the visible mask is empty
    OcclusionLabel label = OcclusionLabel::Unoccluded;

    /// Loss-mask bit: 1 exactly on unoccluded frames.
    int v() const { return label == OcclusionLabel::Unoccluded ? 1 : 0; }
};

inline void to_json(nlohmann::json& j, const OcclusionVerdict& v) {
    j = {{"frame", v.frame_index}, {"label", to_string(v.label)}, {"V", v.v()}};
    j["f_occ"] = v.f_occ ? nlohmann::json(*v.f_occ) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, OcclusionVerdict& v) {
    v.frame_index = j.at("frame").get<int>();
    v.label = parse_label(j.at("label").get<std::string>());
    v.f_occ = j.contains("f_occ") && !j.at("f_occ").is_null() ? std::optional(j.at("f_occ").get<double>())
                                                              : std::nullopt;
    if (j.contains("V") && j.at("V").get<int>() != v.v())
        throw ValidationError("verdict for frame " + std::to_string(v.frame_index) + " has inconsistent V bit");
}

// ---------------------------------------------------------------------------
// Exact Euclidean distance transform (Felzenszwalb & Huttenlocher, separable parabola envelopes)
// ---------------------------------------------------------------------------

namespace edt {

inline constexpr double kInf = 1e20;

inline void transform_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v, std::vector<double>& z) {
    const auto n = f.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    std::size_t k = 0;
    z[0] = -inf;
    z[1] = inf;
    auto intersect = [&](std::size_t q, std::size_t p) {
        const double dq = double(q), dp = double(p);
        return ((f[q] + dq * dq) - (f[p] + dp * dp)) / (2.0 * dq - 2.0 * dp);
    };
    for (std::size_t q = 1; q < n; ++q) {
        double s = intersect(q, static_cast<std::size_t>(v[k]));
        while (s <= z[k]) {
            --k;
            s = intersect(q, static_cast<std::size_t>(v[k]));
        }
        ++k;
        v[k] = static_cast<int>(q);
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < double(q)) ++k;
        const double dist = double(q) - v[k];
        d[q] = dist * dist + f[static_cast<std::size_t>(v[k])];
    }
}

/// Squared distance from every cell to the nearest cell where `feature` is true.
inline std::vector<double> squared_distance(const std::vector<std::uint8_t>& feature, int width, int height) {
    std::vector<double> grid(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) grid[i] = feature[i] ? 0.0 : kInf;
    std::vector<int> v;
    std::vector<double> z;
    std::vector<double> f(static_cast<std::size_t>(std::max(width, height)));
    std::vector<double> d(f.size());
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) f[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y) * width + x];
        transform_1d(std::span(f).first(static_cast<std::size_t>(height)), std::span(d).first(static_cast<std::size_t>(height)), v, z);
        for (int y = 0; y < height; ++y) grid[static_cast<std::size_t>(y) * width + x] = d[static_cast<std::size_t>(y)];
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) f[static_cast<std::size_t>(x)] = grid[static_cast<std::size_t>(y) * width + x];
        transform_1d(std::span(f).first(static_cast<std::size_t>(width)), std::span(d).first(static_cast<std::size_t>(width)), v, z);
        for (int x = 0; x < width; ++x) grid[static_cast<std::size_t>(y) * width + x] = d[static_cast<std::size_t>(x)];
    }
    return grid;
}

} // namespace edt

/// Signed distance field of a mask on a grid padded by one pixel on every side
/// (the padding is outside the mask). Negative inside, positive outside.
/// Cell (x,y) of the image lives at padded index (x+1, y+1).
class SignedDistanceField {
  public:
    explicit SignedDistanceField(const Mask& mask) : width_(mask.width() + 2), height_(mask.height() + 2) {
        std::vector<std::uint8_t> inside(static_cast<std::size_t>(width_) * height_, 0);
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x)
                inside[static_cast<std::size_t>(y + 1) * width_ + (x + 1)] = mask(x, y) ? 1 : 0;
        std::vector<std::uint8_t> outside(inside.size());
        for (std::size_t i = 0; i < inside.size(); ++i) outside[i] = inside[i] ? 0 : 1;
        const auto to_inside = edt::squared_distance(inside, width_, height_);
        const auto to_outside = edt::squared_distance(outside, width_, height_);
        values_.resize(inside.size());
        for (std::size_t i = 0; i < inside.size(); ++i)
            values_[i] = inside[i] ? -std::sqrt(to_outside[i]) : std::sqrt(to_inside[i]);
    }

    /// Value at image pixel (x,y); x in [-1, W], y in [-1, H].
    double operator()(int x, int y) const {
        return values_[static_cast<std::size_t>(y + 1) * width_ + static_cast<std::size_t>(x + 1)];
    }

    /// Central-difference gradient at an image pixel.
    Vec2 gradient(int x, int y) const {
        return {0.5 * ((*this)(x + 1, y) - (*this)(x - 1, y)), 0.5 * ((*this)(x, y + 1) - (*this)(x, y - 1))};
    }

  private:
    int width_;
    int height_;
    std::vector<double> values_;
};

namespace occlusion_detail {

inline constexpr std::array<Pixel, 4> kAxisSteps{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
inline constexpr std::array<Pixel, 8> kAllSteps{{{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

inline bool has_outside_neighbour(const Mask& m, int x, int y, Connectivity c) {
    if (c == Connectivity::Four) {
        for (auto s : kAxisSteps)
            if (!m.at(x + s.x, y + s.y)) return true;
    } else {
        for (auto s : kAllSteps)
            if (!m.at(x + s.x, y + s.y)) return true;
    }
    return false;
}

// Thin structures (one-pixel lines, isolated pixels) have a vanishing distance-field gradient.
// Fall back to the mean direction towards outside neighbours, then to the first outside axis step.
inline Vec2 fallback_normal(const Mask& m, int x, int y) {
    for (const auto& steps : {std::span<const Pixel>(kAxisSteps), std::span<const Pixel>(kAllSteps)}) {
        Vec2 acc;
        for (auto s : steps)
            if (!m.at(x + s.x, y + s.y)) {
                const double len = std::hypot(s.x, s.y);
                acc.x += s.x / len;
                acc.y += s.y / len;
            }
        if (acc.norm() > 1e-9) return acc;
    }
    for (auto s : kAxisSteps)
        if (!m.at(x + s.x, y + s.y)) return {double(s.x), double(s.y)};
    return {0.0, -1.0};
}

} // namespace occlusion_detail

/// Boundary pixels of the mask with outward unit normals and arc-length weights.
/// Pixels beyond the image count as outside the mask.
///
/// Arc weight: a boundary pixel represents 1/max(|nx|,|ny|) of contour length, so axis-aligned
/// runs weigh 1 per pixel and 45° staircases weigh √2 per pixel.
inline std::vector<BoundarySample> extract_boundary(const Mask& mask, const OcclusionConfig& config) {
    if (mask.empty()) throw ValidationError("cannot extract the boundary of an empty mask");
    const SignedDistanceField sdf(mask);
    std::vector<BoundarySample> out;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y) || !occlusion_detail::has_outside_neighbour(mask, x, y, config.boundary_connectivity))
                continue;
            Vec2 n = sdf.gradient(x, y);
            if (n.norm() < 1e-9) n = occlusion_detail::fallback_normal(mask, x, y);
            const double len = n.norm();
            n = {n.x / len, n.y / len};
            BoundarySample s;
            s.position = {x, y};
            s.outward_normal = n;
            s.arc_weight = 1.0 / std::max(std::abs(n.x), std::abs(n.y));
            out.push_back(s);
        }
    }
    return out;
}

/// Forward difference of nearness along the sample's outward normal:
/// (z(p + d·n) − z(p)) / d with bilinear sampling and border clamping.
inline double directional_depth_derivative(const NearnessMap& nearness, const BoundarySample& sample,
                                           const OcclusionConfig& config) {
    const double d = config.probe_distance;
    const double px = sample.position.x + d * sample.outward_normal.x;
    const double py = sample.position.y + d * sample.outward_normal.y;
    const double here = nearness.sample(sample.position.x, sample.position.y);
    return (nearness.sample(px, py) - here) / d;
}

inline bool probe_in_image(const NearnessMap& nearness, const BoundarySample& sample, const OcclusionConfig& config) {
    const double px = sample.position.x + config.probe_distance * sample.outward_normal.x;
    const double py = sample.position.y + config.probe_distance * sample.outward_normal.y;
    return px >= 0.0 && py >= 0.0 && px <= nearness.width() - 1 && py <= nearness.height() - 1;
}

/// Boundary samples with derivative and occlusion flag g filled in.
inline std::vector<BoundarySample> evaluate_boundary(const Mask& mask, const NearnessMap& nearness,
                                                     const OcclusionConfig& config) {
    config.validate();
    require_same_size(mask.width(), mask.height(), nearness.width(), nearness.height(), "occlusion");
    const NearnessMap field = config.normalize_nearness ? normalize_min_max(nearness) : nearness;
    auto samples = extract_boundary(mask, config);
    for (auto& s : samples) {
        s.directional_derivative = directional_depth_derivative(field, s, config);
        s.probe_in_image = probe_in_image(field, s, config);
        s.flag = s.probe_in_image && s.directional_derivative > config.derivative_threshold;
    }
    return samples;
}

/// Arc-length weighted share of the boundary flagged as a potential occlusion boundary.
inline double occlusion_fraction(const Mask& mask, const NearnessMap& nearness, const OcclusionConfig& config) {
    const auto samples = evaluate_boundary(mask, nearness, config);
    double flagged = 0.0;
    double total = 0.0;
    for (const auto& s : samples) {
        total += s.arc_weight;
        if (s.flag) flagged += s.arc_weight;
    }
    return flagged / total;
}

/// Per-frame verdicts. `boxes`, when given, are the filled (possibly extrapolated) amodal boxes;
/// an empty visible mask whose box lies fully outside the image is labelled OutOfFrame.
inline std::vector<OcclusionVerdict> label_frames(const MaskSequence& visible, std::span<const NearnessMap> nearness,
                                                  std::optional<std::span<const AmodalBox>> boxes,
                                                  const OcclusionConfig& config) {
    config.validate();
    if (visible.size() != nearness.size() || (boxes && boxes->size() != visible.size()))
        throw ValidationError("label_frames: sequence lengths differ");
    std::vector<OcclusionVerdict> out(visible.size());
    for (std::size_t i = 0; i < visible.size(); ++i) {
        auto& v = out[i];
        v.frame_index = static_cast<int>(i);
        if (!visible[i].empty()) {
            v.f_occ = occlusion_fraction(visible[i], nearness[i], config);
            v.label = *v.f_occ < config.occlusion_fraction_threshold ? OcclusionLabel::Unoccluded
                                                                     : OcclusionLabel::Occluded;
        } else if (boxes && is_outside_image((*boxes)[i], visible[i].width(), visible[i].height())) {
            v.label = OcclusionLabel::OutOfFrame;
        } else {
            v.label = OcclusionLabel::Occluded;
        }
    }
    return out;
}

} // namespace tabe
