#pragma once

#include "tabe/io.hpp"
#include "tabe/types.hpp"

#include <algorithm>
#include <vector>

namespace tabe {

/// Soft alpha matte, one value in [0,1] per pixel.
class AlphaMatte {
  public:
    AlphaMatte() = default;
    AlphaMatte(int width, int height, double fill = 0.0)
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1) throw ValidationError("matte dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    void validate() const {
        for (double a : data_)
            if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha outside [0,1]");
    }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// One frame of the curation setup: clean plate, object scene, occluder scene, occluder matte.
struct CompositeScene {
    FrameImage clean_plate;
    FrameImage background_with_object;
    FrameImage foreground_with_occluder;
    AlphaMatte alpha;
    Mask gt_amodal;

    void validate() const {
        const int w = clean_plate.width(), h = clean_plate.height();
        require_same_size(background_with_object.width(), background_with_object.height(), w, h, "composite scene");
        require_same_size(foreground_with_occluder.width(), foreground_with_occluder.height(), w, h, "composite scene");
        require_same_size(alpha.width(), alpha.height(), w, h, "composite scene");
        require_same_size(gt_amodal.width(), gt_amodal.height(), w, h, "composite scene");
        alpha.validate();
    }
};

struct CompositorConfig {
    /// Below this alpha the foreground colour is unrecoverable and set to 0 (it carries no weight).
    double alpha_min = 1e-4;
    /// Divide out the object scene instead of the clean plate, as in the printed solve.
    bool verbatim_equation = false;
};

/// Unmixes the occluder colour from I_fg = (1−α)·I_cp + α·C_fg, clamped to [0,1].
inline FrameImage recover_foreground_color(const CompositeScene& scene, const CompositorConfig& config = {}) {
    scene.validate();
    const FrameImage& base = config.verbatim_equation ? scene.background_with_object : scene.clean_plate;
    const int w = scene.clean_plate.width(), h = scene.clean_plate.height();
    FrameImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double a = scene.alpha(x, y);
            if (a <= config.alpha_min) continue;
            for (int c = 0; c < 3; ++c) {
                const double v = (scene.foreground_with_occluder(x, y, c) - (1.0 - a) * base(x, y, c)) / a;
                out(x, y, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    return out;
}

/// I_comp = (1−α)·I_bg + α·C_fg.
inline FrameImage composite(const CompositeScene& scene, const FrameImage& foreground_color) {
    scene.validate();
    const int w = scene.clean_plate.width(), h = scene.clean_plate.height();
    require_same_size(foreground_color.width(), foreground_color.height(), w, h, "composite");
    FrameImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double a = scene.alpha(x, y);
            for (int c = 0; c < 3; ++c)
                out(x, y, c) =
                    std::clamp((1.0 - a) * scene.background_with_object(x, y, c) + a * foreground_color(x, y, c), 0.0, 1.0);
        }
    return out;
}

inline FrameImage composite(const CompositeScene& scene, const CompositorConfig& config = {}) {
    return composite(scene, recover_foreground_color(scene, config));
}

/// Ground-truth visible mask: amodal pixels where the occluder matte is at most `alpha_cut`.
inline Mask derive_visible_mask(const CompositeScene& scene, double alpha_cut = 0.5) {
    if (!(alpha_cut >= 0.0 && alpha_cut < 1.0)) throw ConfigError("alpha cut must lie in [0,1)");
    scene.validate();
    Mask out = scene.gt_amodal;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            if (scene.alpha(x, y) > alpha_cut) out.set(x, y, false);
    return out;
}

/// Drops mask pixels noticeably farther than the mask's mean nearness.
inline Mask depth_refine_mask(const Mask& mask, const NearnessMap& nearness, double margin = 0.05) {
    require_same_size(mask.width(), mask.height(), nearness.width(), nearness.height(), "depth refine");
    if (mask.empty()) throw ValidationError("depth_refine_mask: empty mask");
    std::vector<double> inside;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) inside.push_back(nearness(x, y));
    const double mu = stable_mean(inside);
    Mask out = mask;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y) && !(nearness(x, y) >= mu - margin)) out.set(x, y, false);
    return out;
}

/// Reads an 8-bit single-channel matte; alpha = value / 255.
inline AlphaMatte load_alpha(const fs::path& path) {
    const cv::Mat raw = io_detail::read_raw(path);
    if (raw.channels() != 1 || raw.depth() != CV_8U) throw ValidationError("alpha matte must be 8-bit single-channel: " + path.string());
    AlphaMatte a(raw.cols, raw.rows);
    for (int y = 0; y < raw.rows; ++y)
        for (int x = 0; x < raw.cols; ++x) a(x, y) = raw.at<std::uint8_t>(y, x) / 255.0;
    return a;
}

inline void save_alpha(const AlphaMatte& a, const fs::path& path) {
    cv::Mat raw(a.height(), a.width(), CV_8UC1);
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) raw.at<std::uint8_t>(y, x) = io_detail::quantize(a(x, y));
    io_detail::write_raw(path, raw);
}

} // namespace tabe
