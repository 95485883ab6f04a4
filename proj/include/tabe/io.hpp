#pragma once

#include "tabe/types.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "json.hpp"

namespace tabe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace io_detail {

inline void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

inline cv::Mat read_raw(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("missing file: " + path.string());
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw ValidationError("cannot decode image: " + path.string());
    return m;
}

inline void write_raw(const fs::path& path, const cv::Mat& m) {
    ensure_parent(path);
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch (const cv::Exception&) {
        ok = false;
    }
    if (!ok) throw ConfigError("cannot write image: " + path.string());
}

inline std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace io_detail

// ---------------------------------------------------------------------------
// Masks: 8-bit single-channel image, nonzero = inside.
// ---------------------------------------------------------------------------

inline Mask load_mask(const fs::path& path, std::optional<std::pair<int, int>> expected_size = std::nullopt) {
    cv::Mat m = io_detail::read_raw(path);
    if (m.channels() != 1) throw ValidationError("mask must be single-channel: " + path.string());
    if (m.depth() != CV_8U) throw ValidationError("mask must be 8-bit: " + path.string());
    if (expected_size && (m.cols != expected_size->first || m.rows != expected_size->second))
        throw ValidationError("mask " + path.string() + " does not match declared geometry");
    Mask out(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) out.set(x, y, row[x] != 0);
    }
    return out;
}

inline void save_mask(const Mask& mask, const fs::path& path) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.width(); ++x) row[x] = mask(x, y) ? 255 : 0;
    }
    io_detail::write_raw(path, m);
}

// ---------------------------------------------------------------------------
// Frames: 8-bit RGB (or grey) images, normalised to [0,1] on load.
// ---------------------------------------------------------------------------

inline FrameImage load_image(const fs::path& path, std::optional<std::pair<int, int>> expected_size = std::nullopt) {
    cv::Mat m = io_detail::read_raw(path);
    if (m.depth() != CV_8U) throw ValidationError("frame must be 8-bit: " + path.string());
    if (expected_size && (m.cols != expected_size->first || m.rows != expected_size->second))
        throw ValidationError("frame " + path.string() + " does not match declared geometry");
    const int ch = m.channels();
    if (ch != 1 && ch != 3 && ch != 4) throw ValidationError("unsupported channel count: " + path.string());
    FrameImage out(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            const auto* px = row + static_cast<std::ptrdiff_t>(x) * ch;
            if (ch == 1) {
                const double v = px[0] / 255.0;
                out.set_pixel(x, y, {v, v, v});
            } else {
                // OpenCV channel order is BGR(A).
                out.set_pixel(x, y, {px[2] / 255.0, px[1] / 255.0, px[0] / 255.0});
            }
        }
    }
    return out;
}

inline void save_image(const FrameImage& img, const fs::path& path) {
    cv::Mat m(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width(); ++x) {
            row[3 * x + 0] = io_detail::quantize(img(x, y, 2));
            row[3 * x + 1] = io_detail::quantize(img(x, y, 1));
            row[3 * x + 2] = io_detail::quantize(img(x, y, 0));
        }
    }
    io_detail::write_raw(path, m);
}

/// Round every channel to the nearest 8-bit level, as save_image + load_image would.
inline FrameImage quantize_8bit(FrameImage img) {
    for (auto& v : img.values()) v = io_detail::quantize(v) / 255.0;
    return img;
}

// ---------------------------------------------------------------------------
// Nearness: `<name>.f32` raw little-endian float32, row-major, plus `<name>.json` header.
// ---------------------------------------------------------------------------

enum class DepthConvention { Nearness, Metric };

inline DepthConvention parse_convention(const std::string& s) {
    if (s == "nearness") return DepthConvention::Nearness;
    if (s == "metric") return DepthConvention::Metric;
    throw ValidationError("unknown depth convention: '" + s + "'");
}

inline const char* to_string(DepthConvention c) { return c == DepthConvention::Nearness ? "nearness" : "metric"; }

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("missing file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

/// Writes `j` with two-space indentation and a trailing newline. Key order is sorted, so output is reproducible.
inline void write_json(const fs::path& path, const json& j) {
    io_detail::ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write: " + path.string());
    out << j.dump(2) << '\n';
}

namespace io_detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big)
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    return v;
}

} // namespace io_detail

inline NearnessMap load_nearness(const fs::path& data_path, const fs::path& header_path) {
    const json header = read_json(header_path);
    int width = 0;
    int height = 0;
    std::string convention;
    try {
        width = header.at("width").get<int>();
        height = header.at("height").get<int>();
        convention = header.at("convention").get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError("bad nearness header " + header_path.string() + ": " + e.what());
    }
    const DepthConvention conv = parse_convention(convention);
    if (width < 1 || height < 1) throw ValidationError("bad nearness dimensions in " + header_path.string());

    if (!fs::exists(data_path)) throw ConfigError("missing file: " + data_path.string());
    const auto expected_bytes = static_cast<std::uintmax_t>(width) * height * 4;
    if (fs::file_size(data_path) != expected_bytes)
        throw ValidationError("nearness data size mismatch in " + data_path.string());

    std::ifstream in(data_path, std::ios::binary);
    std::vector<float> values(static_cast<std::size_t>(width) * height);
    for (auto& v : values) {
        std::uint32_t raw = 0;
        in.read(reinterpret_cast<char*>(&raw), 4);
        raw = io_detail::to_little_endian(raw);
        std::memcpy(&v, &raw, 4);
        if (!std::isfinite(v)) throw ValidationError("non-finite nearness value in " + data_path.string());
        if (conv == DepthConvention::Metric) v = -v;
    }
    return NearnessMap(width, height, std::move(values));
}

inline void save_nearness(const NearnessMap& map, const fs::path& data_path, const fs::path& header_path,
                          DepthConvention convention = DepthConvention::Nearness) {
    io_detail::ensure_parent(data_path);
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write: " + data_path.string());
    for (float v : map.values()) {
        if (convention == DepthConvention::Metric) v = -v;
        std::uint32_t raw = 0;
        std::memcpy(&raw, &v, 4);
        raw = io_detail::to_little_endian(raw);
        out.write(reinterpret_cast<const char*>(&raw), 4);
    }
    write_json(header_path, {{"width", map.width()}, {"height", map.height()}, {"convention", to_string(convention)}});
}

// ---------------------------------------------------------------------------
// SequenceManifest
//
// {
//   "version": 1, "width": W, "height": H,
//   "frames": [ { "image": "...", "visible_mask": "...",
//                 "nearness": {"data": "....f32", "header": "....json"},
//                 "amodal_mask": "...", "gt_amodal": "...", "gt_visible": "..." }, ... ],
//   "verdicts": [...], "boxes": [...]          (optional)
// }
//
// Every per-frame field is optional; each command checks for the fields it needs.
// Paths are relative to the manifest's directory.
// ---------------------------------------------------------------------------

struct NearnessRef {
    std::string data;
    std::string header;
};

struct FrameEntry {
    std::optional<std::string> image;
    std::optional<std::string> visible_mask;
    std::optional<NearnessRef> nearness;
    std::optional<std::string> amodal_mask;
    std::optional<std::string> gt_amodal;
    std::optional<std::string> gt_visible;
};

struct SequenceManifest {
    static constexpr int kVersion = 1;

    fs::path base_dir;
    int width = 0;
    int height = 0;
    std::vector<FrameEntry> frames;
    std::optional<json> verdicts;
    std::optional<json> boxes;

    VideoGeometry geometry() const { return {width, height, static_cast<int>(frames.size())}; }
    fs::path resolve(const std::string& rel) const { return base_dir / rel; }
    std::pair<int, int> size() const { return {width, height}; }

    json to_json() const {
        json j;
        j["version"] = kVersion;
        j["width"] = width;
        j["height"] = height;
        json arr = json::array();
        for (const auto& f : frames) {
            json e = json::object();
            if (f.image) e["image"] = *f.image;
            if (f.visible_mask) e["visible_mask"] = *f.visible_mask;
            if (f.nearness) e["nearness"] = {{"data", f.nearness->data}, {"header", f.nearness->header}};
            if (f.amodal_mask) e["amodal_mask"] = *f.amodal_mask;
            if (f.gt_amodal) e["gt_amodal"] = *f.gt_amodal;
            if (f.gt_visible) e["gt_visible"] = *f.gt_visible;
            arr.push_back(std::move(e));
        }
        j["frames"] = std::move(arr);
        if (verdicts) j["verdicts"] = *verdicts;
        if (boxes) j["boxes"] = *boxes;
        return j;
    }

    static SequenceManifest from_json(const json& j, fs::path base_dir) {
        SequenceManifest m;
        m.base_dir = std::move(base_dir);
        try {
            if (j.contains("version") && j.at("version").get<int>() != kVersion)
                throw ValidationError("unsupported manifest version");
            m.width = j.at("width").get<int>();
            m.height = j.at("height").get<int>();
            for (const auto& e : j.at("frames")) {
                FrameEntry f;
                auto opt = [&e](const char* key) -> std::optional<std::string> {
                    if (!e.contains(key) || e.at(key).is_null()) return std::nullopt;
                    return e.at(key).get<std::string>();
                };
                f.image = opt("image");
                f.visible_mask = opt("visible_mask");
                f.amodal_mask = opt("amodal_mask");
                f.gt_amodal = opt("gt_amodal");
                f.gt_visible = opt("gt_visible");
                if (e.contains("nearness") && !e.at("nearness").is_null())
                    f.nearness = NearnessRef{e.at("nearness").at("data").get<std::string>(),
                                             e.at("nearness").at("header").get<std::string>()};
                m.frames.push_back(std::move(f));
            }
            if (j.contains("verdicts")) m.verdicts = j.at("verdicts");
            if (j.contains("boxes")) m.boxes = j.at("boxes");
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed sequence manifest: ") + e.what());
        }
        m.geometry().validate();
        return m;
    }

    static SequenceManifest load(const fs::path& path) {
        return from_json(read_json(path), fs::absolute(path).parent_path());
    }

    void save(const fs::path& path) const { write_json(path, to_json()); }

    MaskSequence load_masks(std::optional<std::string> FrameEntry::*field, const char* name) const {
        MaskSequence out;
        out.reserve(frames.size());
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto& ref = frames[i].*field;
            if (!ref) throw ConfigError(std::string("manifest frame ") + std::to_string(i) + " has no " + name);
            out.push_back(load_mask(resolve(*ref), size()));
        }
        return out;
    }

    MaskSequence load_visible() const { return load_masks(&FrameEntry::visible_mask, "visible_mask"); }
    MaskSequence load_amodal() const { return load_masks(&FrameEntry::amodal_mask, "amodal_mask"); }
    MaskSequence load_gt_amodal() const { return load_masks(&FrameEntry::gt_amodal, "gt_amodal"); }
    MaskSequence load_gt_visible() const { return load_masks(&FrameEntry::gt_visible, "gt_visible"); }

    std::vector<FrameImage> load_images() const {
        std::vector<FrameImage> out;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (!frames[i].image) throw ConfigError("manifest frame " + std::to_string(i) + " has no image");
            out.push_back(load_image(resolve(*frames[i].image), size()));
        }
        return out;
    }

    std::vector<NearnessMap> load_nearness_maps() const {
        std::vector<NearnessMap> out;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (!frames[i].nearness) throw ConfigError("manifest frame " + std::to_string(i) + " has no nearness");
            auto n = load_nearness(resolve(frames[i].nearness->data), resolve(frames[i].nearness->header));
            require_same_size(n.width(), n.height(), width, height, "manifest nearness");
            out.push_back(std::move(n));
        }
        return out;
    }

    /// Loads every referenced file and checks it against the declared geometry.
    void validate() const {
        geometry().validate();
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto& f = frames[i];
            if (f.image) load_image(resolve(*f.image), size());
            for (const auto* m : {&f.visible_mask, &f.amodal_mask, &f.gt_amodal, &f.gt_visible})
                if (*m) load_mask(resolve(**m), size());
            if (f.nearness) {
                auto n = load_nearness(resolve(f.nearness->data), resolve(f.nearness->header));
                require_same_size(n.width(), n.height(), width, height, "manifest nearness");
            }
            if (f.gt_visible && f.gt_amodal &&
                !load_mask(resolve(*f.gt_visible)).is_subset_of(load_mask(resolve(*f.gt_amodal))))
                throw ValidationError("frame " + std::to_string(i) + ": gt_visible is not a subset of gt_amodal");
        }
    }
};

/// Zero-padded frame file stem, e.g. frame_stem(7) == "0007".
inline std::string frame_stem(int index) {
    std::ostringstream os;
    os.width(4);
    os.fill('0');
    os << index;
    return os.str();
}

} // namespace tabe
