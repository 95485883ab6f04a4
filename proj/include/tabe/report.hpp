#pragma once

#include "tabe/io.hpp"
#include "tabe/metrics.hpp"
#include "tabe/types.hpp"

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tabe {

// ---------------------------------------------------------------------------
// Overlays
// ---------------------------------------------------------------------------

struct OverlayLayer {
    Mask mask;
    Color color;
    double opacity = 0.5;
};

inline constexpr Color kAmodalColor{0.0, 1.0, 0.0};     // ground-truth amodal
inline constexpr Color kVisibleColor{1.0, 0.0, 0.0};    // ground-truth visible
inline constexpr Color kPredictionColor{1.0, 0.0, 1.0}; // prediction

/// Alpha-blends the layers over the frame in order.
inline FrameImage render_overlay(const FrameImage& frame, const std::vector<OverlayLayer>& layers) {
    FrameImage out = frame;
    for (const auto& layer : layers) {
        require_same_size(layer.mask.width(), layer.mask.height(), frame.width(), frame.height(), "overlay layer");
        if (!(layer.opacity >= 0.0 && layer.opacity <= 1.0)) throw ConfigError("overlay opacity must lie in [0,1]");
        for (int y = 0; y < frame.height(); ++y)
            for (int x = 0; x < frame.width(); ++x) {
                if (!layer.mask(x, y)) continue;
                const Color c = out.pixel(x, y);
                out.set_pixel(x, y, {(1 - layer.opacity) * c.r + layer.opacity * layer.color.r,
                                     (1 - layer.opacity) * c.g + layer.opacity * layer.color.g,
                                     (1 - layer.opacity) * c.b + layer.opacity * layer.color.b});
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{"Occlusion IoU", "Full Occlusion IoU", "Non Visible Pixel IoU"};
    return cols;
}

inline const std::vector<std::string>& statistics_columns() {
    static const std::vector<std::string> cols{"Scenes", "Images", "Occluded Frames", "Heavily Occluded Frames",
                                               "Fully Occluded Frames"};
    return cols;
}

namespace report_detail {

/// Absent values are printed as an em dash; present ones with `digits` decimals.
inline std::string cell(const std::optional<double>& v, int digits = 3) {
    if (!v) return "—";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
    return buf;
}

inline std::string row(const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
}

inline std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string s = row(header);
    s += "|";
    for (std::size_t i = 0; i < header.size(); ++i) s += "---|";
    s += "\n";
    for (const auto& r : rows) s += row(r);
    return s;
}

} // namespace report_detail

/// Markdown results table: one row per sequence, then the dataset summaries.
inline std::string format_results_table(const DatasetReport& d) {
    using report_detail::cell;
    std::vector<std::string> header{"Sequence"};
    for (const auto& c : result_columns()) header.push_back(c);
    std::vector<std::vector<std::string>> rows;
    auto add = [&](const EvalReport& r, const std::string& name) {
        rows.push_back({name, cell(r.occlusion_iou), cell(r.full_occlusion_iou), cell(r.non_visible_pixel_iou)});
    };
    for (const auto& s : d.sequences) add(s, s.name);
    add(d.per_sequence_mean, "mean (per sequence)");
    add(d.pooled_frames, "mean (pooled frames)");
    return report_detail::table(header, rows);
}

inline nlohmann::json results_table_json(const DatasetReport& d) {
    auto row = [](const EvalReport& r) {
        return nlohmann::json{{"Occlusion IoU", metrics_detail::opt(r.occlusion_iou)},
                              {"Full Occlusion IoU", metrics_detail::opt(r.full_occlusion_iou)},
                              {"Non Visible Pixel IoU", metrics_detail::opt(r.non_visible_pixel_iou)}};
    };
    nlohmann::json seqs = nlohmann::json::object();
    for (const auto& s : d.sequences) seqs[s.name] = row(s);
    return {{"columns", result_columns()},
            {"sequences", seqs},
            {"per_sequence_mean", row(d.per_sequence_mean)},
            {"pooled_frames", row(d.pooled_frames)}};
}

struct DatasetStatistics {
    int scenes = 0;
    int images = 0;
    CategoryCounts counts;
};

inline DatasetStatistics dataset_statistics(const std::vector<std::pair<MaskSequence, MaskSequence>>& sequences) {
    DatasetStatistics s;
    for (const auto& [amodal, visible] : sequences) {
        ++s.scenes;
        s.images += static_cast<int>(amodal.size());
        const auto c = occlusion_statistics(amodal, visible);
        s.counts.frames += c.frames;
        s.counts.occluded += c.occluded;
        s.counts.heavily_occluded += c.heavily_occluded;
        s.counts.fully_occluded += c.fully_occluded;
    }
    return s;
}

inline std::string format_statistics_table(const DatasetStatistics& s) {
    return report_detail::table(statistics_columns(),
                                {{std::to_string(s.scenes), std::to_string(s.images), std::to_string(s.counts.occluded),
                                  std::to_string(s.counts.heavily_occluded), std::to_string(s.counts.fully_occluded)}});
}

inline nlohmann::json statistics_json(const DatasetStatistics& s) {
    return {{"Scenes", s.scenes},
            {"Images", s.images},
            {"Occluded Frames", s.counts.occluded},
            {"Heavily Occluded Frames", s.counts.heavily_occluded},
            {"Fully Occluded Frames", s.counts.fully_occluded}};
}

} // namespace tabe
