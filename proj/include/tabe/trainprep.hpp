#pragma once

#include "tabe/io.hpp"
#include "tabe/occlusion.hpp"
#include "tabe/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabe {

// ---------------------------------------------------------------------------
// Deterministic randomness. Only the raw mt19937_64 stream is used (its output is fixed by the
// standard), so masks are identical across standard library implementations.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }
    /// Uniform real in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::mt19937_64 engine_;
};

struct IntRange {
    int min = 0;
    int max = 0;
};

struct RealRange {
    double min = 0.0;
    double max = 0.0;
};

struct MaskGenConfig {
    std::uint64_t seed = 0;
    IntRange object_mask_count{1, 1};
    IntRange background_mask_count{1, 1};
    IntRange strokes_per_mask{1, 3};
    IntRange stroke_width{3, 9};
    IntRange stroke_vertices{2, 5};
    /// Segment length as a fraction of the larger image side.
    RealRange stroke_segment_fraction{0.05, 0.25};
    IntRange rectangles_per_mask{0, 1};
    /// Rectangle side as a fraction of the corresponding image side.
    RealRange rectangle_fraction{0.05, 0.25};
    /// Every object-occluding mask covers at least this share of the object.
    double min_object_overlap_fraction = 0.1;

    void validate() const {
        for (const auto& r : {object_mask_count, background_mask_count, strokes_per_mask, stroke_width,
                              stroke_vertices, rectangles_per_mask})
            if (r.min < 0 || r.max < r.min) throw ConfigError("mask generation: bad integer range");
        if (stroke_width.min < 1) throw ConfigError("mask generation: stroke width must be >= 1");
        if (stroke_vertices.min < 1) throw ConfigError("mask generation: strokes need at least one vertex");
        for (const auto& r : {stroke_segment_fraction, rectangle_fraction})
            if (r.min < 0.0 || r.max < r.min || r.max > 1.0) throw ConfigError("mask generation: bad fraction range");
        if (!(min_object_overlap_fraction >= 0.0 && min_object_overlap_fraction <= 1.0))
            throw ConfigError("mask generation: overlap fraction must lie in [0,1]");
    }
};

inline void to_json(nlohmann::json& j, const IntRange& r) { j = {r.min, r.max}; }
inline void from_json(const nlohmann::json& j, IntRange& r) { r = {j.at(0).get<int>(), j.at(1).get<int>()}; }
inline void to_json(nlohmann::json& j, const RealRange& r) { j = {r.min, r.max}; }
inline void from_json(const nlohmann::json& j, RealRange& r) { r = {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline void to_json(nlohmann::json& j, const MaskGenConfig& c) {
    j = {{"seed", c.seed},
         {"object_mask_count", c.object_mask_count},
         {"background_mask_count", c.background_mask_count},
         {"strokes_per_mask", c.strokes_per_mask},
         {"stroke_width", c.stroke_width},
         {"stroke_vertices", c.stroke_vertices},
         {"stroke_segment_fraction", c.stroke_segment_fraction},
         {"rectangles_per_mask", c.rectangles_per_mask},
         {"rectangle_fraction", c.rectangle_fraction},
         {"min_object_overlap_fraction", c.min_object_overlap_fraction}};
}

inline void from_json(const nlohmann::json& j, MaskGenConfig& c) {
    MaskGenConfig d;
    c.seed = j.value("seed", d.seed);
    c.object_mask_count = j.value("object_mask_count", d.object_mask_count);
    c.background_mask_count = j.value("background_mask_count", d.background_mask_count);
    c.strokes_per_mask = j.value("strokes_per_mask", d.strokes_per_mask);
    c.stroke_width = j.value("stroke_width", d.stroke_width);
    c.stroke_vertices = j.value("stroke_vertices", d.stroke_vertices);
    c.stroke_segment_fraction = j.value("stroke_segment_fraction", d.stroke_segment_fraction);
    c.rectangles_per_mask = j.value("rectangles_per_mask", d.rectangles_per_mask);
    c.rectangle_fraction = j.value("rectangle_fraction", d.rectangle_fraction);
    c.min_object_overlap_fraction = j.value("min_object_overlap_fraction", d.min_object_overlap_fraction);
}

// ---------------------------------------------------------------------------
// Sample preparation
// ---------------------------------------------------------------------------

inline constexpr Color kWhite{1.0, 1.0, 1.0};

/// Keeps the object's pixels and paints everything else white.
inline FrameImage isolate_on_white(const FrameImage& frame, const Mask& visible) {
    require_same_size(frame.width(), frame.height(), visible.width(), visible.height(), "isolate_on_white");
    FrameImage out(frame.width(), frame.height(), kWhite);
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            if (visible(x, y)) out.set_pixel(x, y, frame.pixel(x, y));
    return out;
}

/// Blanks (zeros) the pixels covered by `m`: the (1−m)⊙x conditioning input.
inline FrameImage apply_random_mask(const FrameImage& image, const Mask& m) {
    require_same_size(image.width(), image.height(), m.width(), m.height(), "apply_random_mask");
    FrameImage out = image;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            if (m(x, y)) out.set_pixel(x, y, {});
    return out;
}

namespace trainprep_detail {

inline void stamp_disc(Mask& m, double cx, double cy, double radius) {
    const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
    const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
    const double r2 = radius * radius;
    for (int y = std::max(0, y0); y <= std::min(m.height() - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(m.width() - 1, x1); ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2) m.set(x, y);
}

inline void draw_thick_segment(Mask& m, double ax, double ay, double bx, double by, int width) {
    const double radius = 0.5 * width;
    const double len = std::hypot(bx - ax, by - ay);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
    for (int s = 0; s <= steps; ++s) {
        const double t = double(s) / steps;
        stamp_disc(m, ax + t * (bx - ax), ay + t * (by - ay), radius);
    }
}

inline void draw_stroke(Mask& m, Rng& rng, Pixel anchor, const MaskGenConfig& c) {
    const int width = rng.uniform_int(c.stroke_width.min, c.stroke_width.max);
    const int vertices = rng.uniform_int(c.stroke_vertices.min, c.stroke_vertices.max);
    const double side = std::max(m.width(), m.height());
    double x = anchor.x, y = anchor.y;
    stamp_disc(m, x, y, 0.5 * width);
    for (int v = 1; v < vertices; ++v) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double len = side * rng.uniform(c.stroke_segment_fraction.min, c.stroke_segment_fraction.max);
        const double nx = std::clamp(x + len * std::cos(angle), 0.0, double(m.width() - 1));
        const double ny = std::clamp(y + len * std::sin(angle), 0.0, double(m.height() - 1));
        draw_thick_segment(m, x, y, nx, ny, width);
        x = nx;
        y = ny;
    }
}

inline void draw_rectangle(Mask& m, Rng& rng, Pixel anchor, const MaskGenConfig& c) {
    const int w = std::max(1, static_cast<int>(std::lround(m.width() * rng.uniform(c.rectangle_fraction.min, c.rectangle_fraction.max))));
    const int h = std::max(1, static_cast<int>(std::lround(m.height() * rng.uniform(c.rectangle_fraction.min, c.rectangle_fraction.max))));
    const int x0 = anchor.x - w / 2, y0 = anchor.y - h / 2;
    for (int y = std::max(0, y0); y < std::min(m.height(), y0 + h); ++y)
        for (int x = std::max(0, x0); x < std::min(m.width(), x0 + w); ++x) m.set(x, y);
}

inline std::vector<Pixel> pixels_where(const Mask& m, bool value) {
    std::vector<Pixel> out;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m(x, y) == value) out.push_back({x, y});
    return out;
}

inline Mask random_shape_mask(Rng& rng, const std::vector<Pixel>& anchors, int width, int height, const MaskGenConfig& c) {
    Mask m(width, height);
    if (anchors.empty()) return m;
    const int strokes = rng.uniform_int(c.strokes_per_mask.min, c.strokes_per_mask.max);
    const int rects = rng.uniform_int(c.rectangles_per_mask.min, c.rectangles_per_mask.max);
    for (int s = 0; s < strokes; ++s)
        draw_stroke(m, rng, anchors[static_cast<std::size_t>(rng.uniform_int(0, int(anchors.size()) - 1))], c);
    for (int r = 0; r < rects; ++r)
        draw_rectangle(m, rng, anchors[static_cast<std::size_t>(rng.uniform_int(0, int(anchors.size()) - 1))], c);
    return m;
}

inline std::vector<Mask> background_masks(Rng& rng, const Mask& object_mask, const MaskGenConfig& c) {
    std::vector<Mask> out;
    const auto outside = pixels_where(object_mask, false);
    const int count = rng.uniform_int(c.background_mask_count.min, c.background_mask_count.max);
    for (int k = 0; k < count; ++k)
        out.push_back(random_shape_mask(rng, outside, object_mask.width(), object_mask.height(), c) - object_mask);
    return out;
}

} // namespace trainprep_detail

/// Random occluding masks for one frame: `object_mask_count` masks anchored on the object, each
/// covering at least `min_object_overlap_fraction` of it, then `background_mask_count` masks
/// disjoint from the object. Strokes and rectangles, deterministic in (config, seed).
inline std::vector<Mask> generate_training_masks(const MaskGenConfig& config, const Mask& object_mask) {
    config.validate();
    if (object_mask.empty()) throw ValidationError("generate_training_masks: object mask is empty");
    using namespace trainprep_detail;
    Rng rng(config.seed);
    const auto inside = pixels_where(object_mask, true);
    const double object_area = static_cast<double>(inside.size());
    std::vector<Mask> out;

    const int object_count = rng.uniform_int(config.object_mask_count.min, config.object_mask_count.max);
    for (int k = 0; k < object_count; ++k) {
        Mask m = random_shape_mask(rng, inside, object_mask.width(), object_mask.height(), config);
        // Top up with discs on uncovered object pixels until the overlap requirement holds.
        while (static_cast<double>((m & object_mask).area()) < config.min_object_overlap_fraction * object_area ||
               (m & object_mask).empty()) {
            const auto uncovered = pixels_where(object_mask - m, true);
            const Pixel p = uncovered[static_cast<std::size_t>(rng.uniform_int(0, int(uncovered.size()) - 1))];
            stamp_disc(m, p.x, p.y, 0.5 * rng.uniform_int(config.stroke_width.min, config.stroke_width.max));
        }
        out.push_back(std::move(m));
    }
    for (auto& m : background_masks(rng, object_mask, config)) out.push_back(std::move(m));
    return out;
}

// ---------------------------------------------------------------------------
// Fine-tuning manifest
// ---------------------------------------------------------------------------

inline constexpr const char* kPromptTemplate = "A video of a [V] on a white background";

inline std::string make_prompt(const std::string& token) {
    std::string p = kPromptTemplate;
    const auto at = p.find("[V]");
    return p.replace(at, 3, token);
}

/// Defaults for the downstream fine-tuner.
struct FinetuneHyperparameters {
    int steps = 500;
    int resolution_width = 512;
    int resolution_height = 512;
    double learning_rate = 1e-3;
    int batch_size = 1;
    int sequence_length = 16;
};

inline void to_json(nlohmann::json& j, const FinetuneHyperparameters& h) {
    j = {{"steps", h.steps},
         {"resolution", {h.resolution_width, h.resolution_height}},
         {"learning_rate", h.learning_rate},
         {"batch_size", h.batch_size},
         {"sequence_length", h.sequence_length}};
}

inline void from_json(const nlohmann::json& j, FinetuneHyperparameters& h) {
    h.steps = j.at("steps").get<int>();
    h.resolution_width = j.at("resolution").at(0).get<int>();
    h.resolution_height = j.at("resolution").at(1).get<int>();
    h.learning_rate = j.at("learning_rate").get<double>();
    h.batch_size = j.at("batch_size").get<int>();
    h.sequence_length = j.at("sequence_length").get<int>();
}

struct TrainSample {
    int frame_index = 0;
    FrameImage input_image;
    Mask random_mask;
    FrameImage masked_input;
    int v = 0;
    std::string prompt;
};

struct FinetuneFrameEntry {
    int frame = 0;
    std::string image;
    std::string visible_mask;
    std::string random_mask;
    std::string masked_input;
    OcclusionLabel label = OcclusionLabel::Unoccluded;
    int v = 0;
    bool operator==(const FinetuneFrameEntry&) const = default;
};

struct FinetuneManifest {
    static constexpr const char* kSchema = "tabe-finetune/1";

    std::string prompt;
    std::string token;
    int width = 0;
    int height = 0;
    FinetuneHyperparameters hyperparameters;
    MaskGenConfig mask_generation;
    std::vector<FinetuneFrameEntry> frames;
};

inline void to_json(nlohmann::json& j, const FinetuneManifest& m) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : m.frames)
        frames.push_back({{"frame", f.frame},
                          {"image", f.image},
                          {"visible_mask", f.visible_mask},
                          {"random_mask", f.random_mask},
                          {"masked_input", f.masked_input},
                          {"label", to_string(f.label)},
                          {"V", f.v}});
    j = {{"schema", FinetuneManifest::kSchema},
         {"prompt", m.prompt},
         {"token", m.token},
         {"width", m.width},
         {"height", m.height},
         {"hyperparameters", m.hyperparameters},
         {"mask_generation", m.mask_generation},
         {"frames", std::move(frames)}};
}

inline void from_json(const nlohmann::json& j, FinetuneManifest& m) {
    if (j.at("schema").get<std::string>() != FinetuneManifest::kSchema)
        throw ValidationError("unsupported fine-tune manifest schema");
    m.prompt = j.at("prompt").get<std::string>();
    m.token = j.at("token").get<std::string>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.hyperparameters = j.at("hyperparameters").get<FinetuneHyperparameters>();
    m.mask_generation = j.at("mask_generation").get<MaskGenConfig>();
    m.frames.clear();
    for (const auto& f : j.at("frames")) {
        FinetuneFrameEntry e;
        e.frame = f.at("frame").get<int>();
        e.image = f.at("image").get<std::string>();
        e.visible_mask = f.at("visible_mask").get<std::string>();
        e.random_mask = f.at("random_mask").get<std::string>();
        e.masked_input = f.at("masked_input").get<std::string>();
        e.label = parse_label(f.at("label").get<std::string>());
        e.v = f.at("V").get<int>();
        if (e.v != (e.label == OcclusionLabel::Unoccluded ? 1 : 0))
            throw ValidationError("fine-tune manifest frame " + std::to_string(e.frame) + " has inconsistent V bit");
        m.frames.push_back(std::move(e));
    }
}

/// The random mask for one frame: union of the generated masks, seeded per frame.
/// Frames with an empty visible mask get background-style masks only.
inline Mask frame_random_mask(const MaskGenConfig& config, const Mask& visible, int frame_index) {
    MaskGenConfig c = config;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(frame_index));
    Mask m(visible.width(), visible.height());
    if (!visible.empty()) {
        for (const auto& g : generate_training_masks(c, visible)) m |= g;
        return m;
    }
    c.validate();
    Rng rng(c.seed);
    for (const auto& g : trainprep_detail::background_masks(rng, visible, c)) m |= g;
    return m;
}

struct TrainingSet {
    std::vector<TrainSample> samples;
    FinetuneManifest manifest;
};

/// Builds one sample per frame (the whole sequence is kept; V gates the loss) and, when `out_dir`
/// is non-empty, writes images, masks and `finetune_manifest.json` beneath it.
inline TrainingSet build_training_manifest(const std::vector<FrameImage>& frames, const MaskSequence& visible,
                                           const std::vector<OcclusionVerdict>& verdicts,
                                           const MaskGenConfig& config, const std::string& token,
                                           const fs::path& out_dir = {},
                                           const FinetuneHyperparameters& hyper = {}) {
    config.validate();
    if (frames.size() != visible.size() || frames.size() != verdicts.size())
        throw ValidationError("build_training_manifest: sequence lengths differ");
    if (frames.empty()) throw ValidationError("build_training_manifest: empty sequence");
    if (token.empty()) throw ConfigError("rare token must not be empty");

    TrainingSet set;
    auto& man = set.manifest;
    man.prompt = make_prompt(token);
    man.token = token;
    man.width = frames[0].width();
    man.height = frames[0].height();
    man.hyperparameters = hyper;
    man.mask_generation = config;

    for (std::size_t i = 0; i < frames.size(); ++i) {
        const int index = static_cast<int>(i);
        TrainSample s;
        s.frame_index = index;
        s.input_image = isolate_on_white(frames[i], visible[i]);
        s.random_mask = frame_random_mask(config, visible[i], index);
        s.masked_input = apply_random_mask(s.input_image, s.random_mask);
        s.v = verdicts[i].v();
        s.prompt = man.prompt;

        const std::string stem = frame_stem(index) + ".png";
        FinetuneFrameEntry e{index,
                             "images/" + stem,
                             "visible_masks/" + stem,
                             "random_masks/" + stem,
                             "masked_inputs/" + stem,
                             verdicts[i].label,
                             s.v};
        if (!out_dir.empty()) {
            save_image(s.input_image, out_dir / e.image);
            save_mask(visible[i], out_dir / e.visible_mask);
            save_mask(s.random_mask, out_dir / e.random_mask);
            save_image(s.masked_input, out_dir / e.masked_input);
        }
        man.frames.push_back(std::move(e));
        set.samples.push_back(std::move(s));
    }
    if (!out_dir.empty()) write_json(out_dir / "finetune_manifest.json", man);
    return set;
}

} // namespace tabe
