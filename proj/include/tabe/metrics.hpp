#pragma once

#include "tabe/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabe {

/// IoU kept as the exact pixel-count ratio; value() converts to double.
struct IouRatio {
    std::uint64_t intersection = 0;
    std::uint64_t union_ = 0;

    double value() const { return static_cast<double>(intersection) / static_cast<double>(union_); }
};

/// |a∩b| / |a∪b|; nullopt when both masks are empty.
inline std::optional<IouRatio> iou_ratio(const Mask& a, const Mask& b) {
    require_same_size(a.width(), a.height(), b.width(), b.height(), "iou");
    IouRatio r;
    const auto& pa = a.bytes();
    const auto& pb = b.bytes();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        r.intersection += (pa[i] & pb[i]);
        r.union_ += (pa[i] | pb[i]);
    }
    if (r.union_ == 0) return std::nullopt;
    return r;
}

inline std::optional<double> iou(const Mask& a, const Mask& b) {
    const auto r = iou_ratio(a, b);
    return r ? std::optional(r->value()) : std::nullopt;
}

/// IoU over the hidden pixels only: ground-truth visible pixels are removed from both masks.
/// nullopt when the ground truth has no hidden pixels.
inline std::optional<IouRatio> non_visible_pixel_iou_ratio(const Mask& pred, const Mask& gt_amodal,
                                                           const Mask& gt_visible) {
    require_same_size(pred.width(), pred.height(), gt_amodal.width(), gt_amodal.height(), "non-visible iou");
    require_same_size(gt_visible.width(), gt_visible.height(), gt_amodal.width(), gt_amodal.height(), "non-visible iou");
    if (!gt_visible.is_subset_of(gt_amodal)) throw ValidationError("gt_visible is not a subset of gt_amodal");
    const Mask hidden = gt_amodal - gt_visible;
    if (hidden.empty()) return std::nullopt;
    return iou_ratio(pred - gt_visible, hidden);
}

inline std::optional<double> non_visible_pixel_iou(const Mask& pred, const Mask& gt_amodal, const Mask& gt_visible) {
    const auto r = non_visible_pixel_iou_ratio(pred, gt_amodal, gt_visible);
    return r ? std::optional(r->value()) : std::nullopt;
}

struct FrameEval {
    int frame_index = 0;
    std::optional<double> iou;               ///< nullopt when gt_amodal is empty
    std::optional<double> non_visible_iou;   ///< nullopt when nothing is hidden
    std::optional<double> occlusion_fraction; ///< 1 − |vis|/|amodal|; nullopt when gt_amodal is empty
    bool occluded = false;
    bool heavily_occluded = false;
    bool fully_occluded = false;
};

struct CategoryCounts {
    int frames = 0; ///< frames with a nonempty amodal ground truth
    int occluded = 0;
    int heavily_occluded = 0;
    int fully_occluded = 0;
};

struct EvalReport {
    std::string name;
    std::optional<double> mean_iou;
    std::optional<double> occlusion_iou;
    std::optional<double> full_occlusion_iou;
    std::optional<double> non_visible_pixel_iou;
    CategoryCounts counts;
    std::vector<FrameEval> frames;
};

namespace metrics_detail {

struct Mean {
    double sum = 0.0;
    int n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    std::optional<double> get() const { return n ? std::optional(sum / n) : std::nullopt; }
};

} // namespace metrics_detail

inline constexpr double kHeavyOcclusionFraction = 0.5;

inline FrameEval evaluate_frame(int index, const Mask& pred, const Mask& gt_amodal, const Mask& gt_visible) {
    FrameEval f;
    f.frame_index = index;
    const auto amodal_area = gt_amodal.area();
    f.non_visible_iou = non_visible_pixel_iou(pred, gt_amodal, gt_visible);
    if (amodal_area == 0) return f;
    const auto visible_area = gt_visible.area();
    f.iou = iou(pred, gt_amodal);
    f.occlusion_fraction = 1.0 - static_cast<double>(visible_area) / static_cast<double>(amodal_area);
    f.occluded = visible_area < amodal_area;
    f.heavily_occluded = *f.occlusion_fraction > kHeavyOcclusionFraction;
    f.fully_occluded = visible_area == 0;
    return f;
}

inline EvalReport evaluate_sequence(const MaskSequence& pred, const MaskSequence& gt_amodal,
                                    const MaskSequence& gt_visible, std::string name = {}) {
    if (pred.size() != gt_amodal.size() || pred.size() != gt_visible.size())
        throw ValidationError("evaluate_sequence: sequence lengths differ");
    EvalReport r;
    r.name = std::move(name);
    metrics_detail::Mean mean, occ, full, hidden;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        auto f = evaluate_frame(static_cast<int>(i), pred[i], gt_amodal[i], gt_visible[i]);
        if (f.iou) {
            ++r.counts.frames;
            mean.add(*f.iou);
            if (f.occluded) {
                ++r.counts.occluded;
                occ.add(*f.iou);
            }
            if (f.heavily_occluded) ++r.counts.heavily_occluded;
            if (f.fully_occluded) {
                ++r.counts.fully_occluded;
                full.add(*f.iou);
            }
            if (f.non_visible_iou) hidden.add(*f.non_visible_iou);
        }
        r.frames.push_back(f);
    }
    r.mean_iou = mean.get();
    r.occlusion_iou = occ.get();
    r.full_occlusion_iou = full.get();
    r.non_visible_pixel_iou = hidden.get();
    return r;
}

/// Category counts from ground truth alone (no prediction needed).
inline CategoryCounts occlusion_statistics(const MaskSequence& gt_amodal, const MaskSequence& gt_visible) {
    if (gt_amodal.size() != gt_visible.size()) throw ValidationError("occlusion_statistics: sequence lengths differ");
    CategoryCounts c;
    for (std::size_t i = 0; i < gt_amodal.size(); ++i) {
        const auto f = evaluate_frame(static_cast<int>(i), gt_amodal[i], gt_amodal[i], gt_visible[i]);
        if (!f.iou) continue;
        ++c.frames;
        c.occluded += f.occluded;
        c.heavily_occluded += f.heavily_occluded;
        c.fully_occluded += f.fully_occluded;
    }
    return c;
}

/// Dataset-level aggregation, reported both ways: mean of per-sequence means, and pooled over all frames.
struct DatasetReport {
    std::vector<EvalReport> sequences;
    EvalReport per_sequence_mean;
    EvalReport pooled_frames;
};

inline DatasetReport aggregate(std::vector<EvalReport> sequences) {
    DatasetReport d;
    metrics_detail::Mean s_mean, s_occ, s_full, s_hidden;
    metrics_detail::Mean p_mean, p_occ, p_full, p_hidden;
    CategoryCounts total;
    for (const auto& r : sequences) {
        if (r.mean_iou) s_mean.add(*r.mean_iou);
        if (r.occlusion_iou) s_occ.add(*r.occlusion_iou);
        if (r.full_occlusion_iou) s_full.add(*r.full_occlusion_iou);
        if (r.non_visible_pixel_iou) s_hidden.add(*r.non_visible_pixel_iou);
        total.frames += r.counts.frames;
        total.occluded += r.counts.occluded;
        total.heavily_occluded += r.counts.heavily_occluded;
        total.fully_occluded += r.counts.fully_occluded;
        for (const auto& f : r.frames) {
            if (!f.iou) continue;
            p_mean.add(*f.iou);
            if (f.occluded) p_occ.add(*f.iou);
            if (f.fully_occluded) p_full.add(*f.iou);
            if (f.non_visible_iou) p_hidden.add(*f.non_visible_iou);
        }
    }
    d.per_sequence_mean = {"per_sequence_mean", s_mean.get(), s_occ.get(), s_full.get(), s_hidden.get(), total, {}};
    d.pooled_frames = {"pooled_frames", p_mean.get(), p_occ.get(), p_full.get(), p_hidden.get(), total, {}};
    d.sequences = std::move(sequences);
    return d;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace metrics_detail {

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
inline std::optional<double> opt_get(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace metrics_detail

inline void to_json(nlohmann::json& j, const CategoryCounts& c) {
    j = {{"frames", c.frames},
         {"occluded", c.occluded},
         {"heavily_occluded", c.heavily_occluded},
         {"fully_occluded", c.fully_occluded}};
}

inline void from_json(const nlohmann::json& j, CategoryCounts& c) {
    c.frames = j.at("frames").get<int>();
    c.occluded = j.at("occluded").get<int>();
    c.heavily_occluded = j.at("heavily_occluded").get<int>();
    c.fully_occluded = j.at("fully_occluded").get<int>();
}

inline void to_json(nlohmann::json& j, const FrameEval& f) {
    using metrics_detail::opt;
    j = {{"frame", f.frame_index},
         {"iou", opt(f.iou)},
         {"non_visible_iou", opt(f.non_visible_iou)},
         {"occlusion_fraction", opt(f.occlusion_fraction)},
         {"occluded", f.occluded},
         {"heavily_occluded", f.heavily_occluded},
         {"fully_occluded", f.fully_occluded}};
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
    using metrics_detail::opt;
    j = {{"name", r.name},
         {"mean_iou", opt(r.mean_iou)},
         {"occlusion_iou", opt(r.occlusion_iou)},
         {"full_occlusion_iou", opt(r.full_occlusion_iou)},
         {"non_visible_pixel_iou", opt(r.non_visible_pixel_iou)},
         {"counts", r.counts}};
    if (!r.frames.empty()) j["frames"] = r.frames;
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
    using metrics_detail::opt_get;
    r.name = j.value("name", "");
    r.mean_iou = opt_get(j, "mean_iou");
    r.occlusion_iou = opt_get(j, "occlusion_iou");
    r.full_occlusion_iou = opt_get(j, "full_occlusion_iou");
    r.non_visible_pixel_iou = opt_get(j, "non_visible_pixel_iou");
    r.counts = j.at("counts").get<CategoryCounts>();
}

inline void to_json(nlohmann::json& j, const DatasetReport& d) {
    j = {{"schema", "tabe-eval-report/1"},
         {"sequences", d.sequences},
         {"dataset", {{"per_sequence_mean", d.per_sequence_mean}, {"pooled_frames", d.pooled_frames}}}};
}

} // namespace tabe
