#pragma once

#include "tabe/io.hpp"
#include "tabe/trainprep.hpp"
#include "tabe/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace tabe {

/// A flat-coloured object (rectangle or ellipse) moving at constant velocity behind a vertical
/// occluder bar over a textured background. Nearness: background ≈ 0.1, object 0.5, occluder 0.9.
struct SynthConfig {
    int width = 64;
    int height = 48;
    int frame_count = 30;
    std::uint64_t seed = 0;
};

struct SynthScene {
    VideoGeometry geometry;
    std::vector<FrameImage> frames;
    MaskSequence gt_amodal;
    MaskSequence gt_visible;
    std::vector<NearnessMap> nearness;
    /// The whole object on a white background: what a perfect outpainter would return.
    std::vector<FrameImage> object_on_white;
    std::array<int, 3> object_color{};
    Mask query;
};

namespace synth_detail {

inline double level(int v) { return v / 255.0; }

inline Mask object_shape(int w, int h, int ox, int oy, bool ellipse, int width, int height) {
    Mask m(width, height);
    const double cx = ox + 0.5 * w, cy = oy + 0.5 * h;
    for (int y = oy; y < oy + h; ++y)
        for (int x = ox; x < ox + w; ++x) {
            if (!m.contains(x, y)) continue;
            if (ellipse) {
                const double dx = (x + 0.5 - cx) / (0.5 * w), dy = (y + 0.5 - cy) / (0.5 * h);
                if (dx * dx + dy * dy > 1.0) continue;
            }
            m.set(x, y);
        }
    return m;
}

} // namespace synth_detail

inline SynthScene generate_synthetic_scene(const SynthConfig& config) {
    using synth_detail::level;
    if (config.frame_count < 2) throw ConfigError("synthetic scenes need at least two frames");
    if (config.width < 40 || config.height < 24) throw ConfigError("synthetic scenes need at least 40x24 pixels");
    Rng rng(derive_seed(config.seed, 0x5c3e));
    SynthScene s;
    s.geometry = {config.width, config.height, config.frame_count};

    const int obj_w = rng.uniform_int(8, 12);
    const int obj_h = rng.uniform_int(9, std::min(14, config.height / 2));
    const bool ellipse = rng.bernoulli(0.5);
    s.object_color = {rng.uniform_int(190, 240), rng.uniform_int(15, 60), rng.uniform_int(15, 60)};
    const Color object{level(s.object_color[0]), level(s.object_color[1]), level(s.object_color[2])};

    const int x_start = 3;
    const int x_end = config.width - 3 - obj_w;
    const double vx = double(x_end - x_start) / (config.frame_count - 1);
    const int y_start = rng.uniform_int(4, config.height - 4 - obj_h);
    const int y_drift = rng.uniform_int(-2, 2);

    std::vector<int> xs, ys;
    for (int i = 0; i < config.frame_count; ++i) {
        xs.push_back(x_start + static_cast<int>(std::lround(vx * i)));
        ys.push_back(std::clamp(y_start + static_cast<int>(std::lround(double(y_drift) * i / (config.frame_count - 1))), 1,
                                config.height - 1 - obj_h));
    }

    // Widen the bar until at least one frame hides the object completely.
    const int centre = config.width / 2 + rng.uniform_int(-3, 3);
    int bar_w = obj_w + static_cast<int>(std::ceil(vx)) + 2;
    int bar_x0 = 0;
    for (;; bar_w += 2) {
        bar_x0 = centre - bar_w / 2;
        bool hidden = false;
        for (int i = 0; i < config.frame_count; ++i) hidden = hidden || (xs[i] >= bar_x0 && xs[i] + obj_w <= bar_x0 + bar_w);
        if (hidden) break;
    }
    const int bar_x1 = bar_x0 + bar_w;

    // Static background texture and nearness; values stay clear of the object's colour.
    FrameImage background(config.width, config.height);
    NearnessMap base_nearness(config.width, config.height);
    for (int y = 0; y < config.height; ++y)
        for (int x = 0; x < config.width; ++x) {
            background.set_pixel(x, y, {level(rng.uniform_int(70, 110)), level(rng.uniform_int(90, 120)),
                                        level(rng.uniform_int(100, 130))});
            base_nearness(x, y) = static_cast<float>(0.1 + 0.05 * y / config.height);
            if (x >= bar_x0 && x < bar_x1) {
                background.set_pixel(x, y, {level(rng.uniform_int(30, 50)), level(rng.uniform_int(130, 150)),
                                            level(rng.uniform_int(40, 60))});
                base_nearness(x, y) = 0.9f;
            }
        }

    for (int i = 0; i < config.frame_count; ++i) {
        Mask amodal = synth_detail::object_shape(obj_w, obj_h, xs[i], ys[i], ellipse, config.width, config.height);
        Mask visible = amodal;
        FrameImage frame = background;
        FrameImage isolated(config.width, config.height, kWhite);
        NearnessMap near = base_nearness;
        for (int y = 0; y < config.height; ++y)
            for (int x = 0; x < config.width; ++x) {
                if (!amodal(x, y)) continue;
                isolated.set_pixel(x, y, object);
                if (x >= bar_x0 && x < bar_x1) {
                    visible.set(x, y, false);
                    continue;
                }
                frame.set_pixel(x, y, object);
                near(x, y) = 0.5f;
            }
        s.frames.push_back(std::move(frame));
        s.gt_amodal.push_back(std::move(amodal));
        s.gt_visible.push_back(std::move(visible));
        s.nearness.push_back(std::move(near));
        s.object_on_white.push_back(std::move(isolated));
    }
    s.query = s.gt_visible[0];
    return s;
}

/// Writes the scene as a sequence manifest (images, ground truth, nearness), the query mask and a
/// mock-backend scene file. Returns the manifest path.
inline fs::path write_synthetic_scene(const SynthScene& s, const fs::path& dir) {
    SequenceManifest m;
    m.base_dir = dir;
    m.width = s.geometry.width;
    m.height = s.geometry.height;
    json mock_frames = json::array();
    for (int i = 0; i < s.geometry.frame_count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const std::string stem = frame_stem(i);
        FrameEntry f;
        f.image = "frames/" + stem + ".png";
        f.gt_amodal = "gt_amodal/" + stem + ".png";
        f.gt_visible = "gt_visible/" + stem + ".png";
        f.visible_mask = f.gt_visible; // lets the reasoning commands run on ground-truth visibility
        f.nearness = NearnessRef{"nearness/" + stem + ".f32", "nearness/" + stem + ".json"};
        save_image(s.frames[idx], dir / *f.image);
        save_mask(s.gt_amodal[idx], dir / *f.gt_amodal);
        save_mask(s.gt_visible[idx], dir / *f.gt_visible);
        save_nearness(s.nearness[idx], dir / f.nearness->data, dir / f.nearness->header);
        const std::string white = "object_on_white/" + stem + ".png";
        save_image(s.object_on_white[idx], dir / white);
        mock_frames.push_back({{"nearness", {{"data", f.nearness->data}, {"header", f.nearness->header}}},
                               {"object_on_white", white}});
        m.frames.push_back(std::move(f));
    }
    save_mask(s.query, dir / "query.png");
    m.save(dir / "manifest.json");
    write_json(dir / "mock_scene.json", {{"schema", "tabe-mock-scene/1"},
                                         {"width", s.geometry.width},
                                         {"height", s.geometry.height},
                                         {"object_color", s.object_color},
                                         {"frames", std::move(mock_frames)}});
    return dir / "manifest.json";
}

} // namespace tabe
