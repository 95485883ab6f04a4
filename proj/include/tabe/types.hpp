#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabe {

// ---------------------------------------------------------------------------
// Errors. The CLI maps each family onto a process exit code.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad flags, unreadable config, missing input files. Exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// A neural backend timed out or violated the wire protocol. Exit code 3.
struct BackendError : Error {
    using Error::Error;
};

/// Geometry mismatch, broken precondition or invariant. Exit code 4.
struct ValidationError : Error {
    using Error::Error;
};

struct VideoGeometry {
    int width = 0;
    int height = 0;
    int frame_count = 0;

    void validate() const {
        if (width < 1 || height < 1 || frame_count < 1)
            throw ValidationError("video geometry must have positive width, height and frame count");
    }
    bool operator==(const VideoGeometry&) const = default;
};

struct Pixel {
    int x = 0;
    int y = 0;
    bool operator==(const Pixel&) const = default;
    auto operator<=>(const Pixel&) const = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double norm() const { return std::hypot(x, y); }
};

inline void require_same_size(int w0, int h0, int w1, int h1, const char* what) {
    if (w0 != w1 || h0 != h1)
        throw ValidationError(std::string(what) + ": geometry mismatch (" + std::to_string(w0) + "x" +
                              std::to_string(h0) + " vs " + std::to_string(w1) + "x" + std::to_string(h1) + ")");
}

// ---------------------------------------------------------------------------
// Mask
// ---------------------------------------------------------------------------

/// Per-pixel boolean over one frame. Stored as one byte per pixel (0 or 1), row-major.
class Mask {
  public:
    Mask() = default;
    Mask(int width, int height, bool value = false)
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, value ? 1 : 0) {
        if (width < 1 || height < 1) throw ValidationError("mask dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    bool operator()(int x, int y) const { return data_[index(x, y)] != 0; }
    bool at(int x, int y) const { return contains(x, y) && (*this)(x, y); }
    void set(int x, int y, bool v = true) { data_[index(x, y)] = v ? 1 : 0; }

    bool operator[](std::size_t i) const { return data_[i] != 0; }
    void set_index(std::size_t i, bool v) { data_[i] = v ? 1 : 0; }

    const std::vector<std::uint8_t>& bytes() const { return data_; }

    std::size_t area() const {
        return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
    }
    bool empty() const { return std::none_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v != 0; }); }

    bool is_subset_of(const Mask& other) const {
        require_same_size(width_, height_, other.width_, other.height_, "mask subset");
        for (std::size_t i = 0; i < data_.size(); ++i)
            if (data_[i] && !other.data_[i]) return false;
        return true;
    }

    Mask& operator&=(const Mask& o) { return combine(o, [](auto a, auto b) { return a && b; }); }
    Mask& operator|=(const Mask& o) { return combine(o, [](auto a, auto b) { return a || b; }); }
    /// Set difference: this ∖ o.
    Mask& operator-=(const Mask& o) { return combine(o, [](auto a, auto b) { return a && !b; }); }

    friend Mask operator&(Mask a, const Mask& b) { return a &= b; }
    friend Mask operator|(Mask a, const Mask& b) { return a |= b; }
    friend Mask operator-(Mask a, const Mask& b) { return a -= b; }
    Mask operator~() const {
        Mask out = *this;
        for (auto& v : out.data_) v = v ? 0 : 1;
        return out;
    }

    bool operator==(const Mask&) const = default;

  private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    template <typename Op>
    Mask& combine(const Mask& o, Op op) {
        require_same_size(width_, height_, o.width_, o.height_, "mask combine");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = op(data_[i] != 0, o.data_[i] != 0) ? 1 : 0;
        return *this;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

using MaskSequence = std::vector<Mask>;

inline void require_sequence_geometry(const MaskSequence& seq, const VideoGeometry& g, const char* what) {
    if (static_cast<int>(seq.size()) != g.frame_count)
        throw ValidationError(std::string(what) + ": sequence length " + std::to_string(seq.size()) +
                              " does not match frame count " + std::to_string(g.frame_count));
    for (const auto& m : seq) require_same_size(m.width(), m.height(), g.width, g.height, what);
}

// ---------------------------------------------------------------------------
// FrameImage: RGB in [0,1], stored as double so the compositing algebra stays exact.
// ---------------------------------------------------------------------------

struct Color {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    bool operator==(const Color&) const = default;
};

class FrameImage {
  public:
    FrameImage() = default;
    FrameImage(int width, int height, Color fill = {})
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
        if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
        for (std::size_t i = 0; i < data_.size(); i += 3) {
            data_[i] = fill.r;
            data_[i + 1] = fill.g;
            data_[i + 2] = fill.b;
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    double& operator()(int x, int y, int c) { return data_[index(x, y) + c]; }
    double operator()(int x, int y, int c) const { return data_[index(x, y) + c]; }

    Color pixel(int x, int y) const {
        const auto i = index(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set_pixel(int x, int y, Color c) {
        const auto i = index(x, y);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool operator==(const FrameImage&) const = default;

  private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// NearnessMap: canonical proximity field, larger = closer to the camera.
// ---------------------------------------------------------------------------

class NearnessMap {
  public:
    NearnessMap() = default;
    NearnessMap(int width, int height, float fill = 0.0f)
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1) throw ValidationError("nearness dimensions must be positive");
    }
    NearnessMap(int width, int height, std::vector<float> values)
        : width_(width), height_(height), data_(std::move(values)) {
        if (width < 1 || height < 1) throw ValidationError("nearness dimensions must be positive");
        if (data_.size() != static_cast<std::size_t>(width) * height)
            throw ValidationError("nearness value count does not match dimensions");
        for (float v : data_)
            if (!std::isfinite(v)) throw ValidationError("nearness map contains non-finite values");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    float operator()(int x, int y) const { return data_[index(x, y)]; }
    float& operator()(int x, int y) { return data_[index(x, y)]; }

    const std::vector<float>& values() const { return data_; }
    std::vector<float>& values() { return data_; }

    /// Bilinear sample at real pixel coordinates; coordinates are clamped to the valid pixel range.
    double sample(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const int x1 = std::min(x0 + 1, width_ - 1);
        const int y1 = std::min(y0 + 1, height_ - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        const double top = (1.0 - fx) * (*this)(x0, y0) + fx * (*this)(x1, y0);
        const double bottom = (1.0 - fx) * (*this)(x0, y1) + fx * (*this)(x1, y1);
        return (1.0 - fy) * top + fy * bottom;
    }

    bool operator==(const NearnessMap&) const = default;

  private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Per-frame min-max normalisation to [0,1]. A flat field maps to all zeros.
inline NearnessMap normalize_min_max(const NearnessMap& in) {
    const auto& v = in.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    NearnessMap out(in.width(), in.height(), 0.0f);
    const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
    if (range <= 1e-12) return out;
    auto& o = out.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        o[i] = static_cast<float>((static_cast<double>(v[i]) - *lo) / range);
    return out;
}

/// Mean computed as min + mean(v − min): exact for constant inputs, so a constant field never
/// compares strictly above or below its own mean.
template <typename Range>
double stable_mean(const Range& values) {
    auto it = std::begin(values);
    const auto end = std::end(values);
    if (it == end) throw ValidationError("mean of an empty set");
    double lo = static_cast<double>(*it);
    std::size_t n = 0;
    for (auto v = it; v != end; ++v) lo = std::min(lo, static_cast<double>(*v));
    double acc = 0.0;
    for (; it != end; ++it, ++n) acc += static_cast<double>(*it) - lo;
    return lo + acc / static_cast<double>(n);
}

} // namespace tabe
