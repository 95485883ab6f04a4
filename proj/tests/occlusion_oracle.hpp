#pragma once
// Brute-force occlusion oracle shared by the unit tests and the acceptance runner.

#include "tabe/occlusion.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using namespace tabe;


// ---------------------------------------------------------------------------
// Brute-force oracle: every quantity recomputed from its definition, O(N^2).
// ---------------------------------------------------------------------------

struct OracleSample {
    int x, y;
    double nx, ny;
    bool flag;
};

/// Signed distance between pixel centres on the grid padded by one outside pixel; negative inside.
inline std::vector<double> brute_sdf(const Mask& m) {
    const int W = m.width() + 2, H = m.height() + 2;
    auto inside = [&](int px, int py) { return m.at(px - 1, py - 1); };
    std::vector<double> out(static_cast<std::size_t>(W) * H);
    for (int py = 0; py < H; ++py)
        for (int px = 0; px < W; ++px) {
            const bool in = inside(px, py);
            double best = 1e300;
            for (int qy = 0; qy < H; ++qy)
                for (int qx = 0; qx < W; ++qx)
                    if (inside(qx, qy) != in) best = std::min(best, std::hypot(px - qx, py - qy));
            out[static_cast<std::size_t>(py) * W + px] = in ? -best : best;
        }
    return out;
}

inline double bilinear(const std::vector<double>& f, int w, int h, double x, double y) {
    x = std::min(std::max(x, 0.0), w - 1.0);
    y = std::min(std::max(y, 0.0), h - 1.0);
    const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    auto at = [&](int a, int b) { return f[static_cast<std::size_t>(b) * w + a]; };
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
}

inline std::vector<OracleSample> oracle_flags(const Mask& m, const NearnessMap& z, double t, double d) {
    const int w = m.width(), h = m.height(), W = w + 2;
    const auto sdf = brute_sdf(m);
    auto s = [&](int x, int y) { return sdf[static_cast<std::size_t>(y + 1) * W + (x + 1)]; };

    std::vector<double> field(z.values().begin(), z.values().end());
    const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
    const double a = *lo, range = *hi - *lo;
    for (auto& v : field) v = range > 1e-12 ? (v - a) / range : 0.0;

    std::vector<OracleSample> out;
    const int axis[4][2] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
    const int all[8][2] = {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m(x, y)) continue;
            bool boundary = false;
            for (auto& st : axis) boundary = boundary || !m.at(x + st[0], y + st[1]);
            if (!boundary) continue;
            double nx = 0.5 * (s(x + 1, y) - s(x - 1, y)), ny = 0.5 * (s(x, y + 1) - s(x, y - 1));
            if (std::hypot(nx, ny) < 1e-9) {
                nx = ny = 0;
                for (auto& st : axis)
                    if (!m.at(x + st[0], y + st[1])) nx += st[0], ny += st[1];
                if (std::hypot(nx, ny) < 1e-9) {
                    nx = ny = 0;
                    for (auto& st : all)
                        if (!m.at(x + st[0], y + st[1])) {
                            const double l = std::hypot(st[0], st[1]);
                            nx += st[0] / l, ny += st[1] / l;
                        }
                }
                if (std::hypot(nx, ny) < 1e-9)
                    for (auto& st : axis)
                        if (!m.at(x + st[0], y + st[1])) {
                            nx = st[0], ny = st[1];
                            break;
                        }
            }
            const double len = std::hypot(nx, ny);
            nx /= len, ny /= len;
            const double px = x + d * nx, py = y + d * ny;
            const bool in_image = px >= 0 && py >= 0 && px <= w - 1 && py <= h - 1;
            const double deriv = (bilinear(field, w, h, px, py) - bilinear(field, w, h, x, y)) / d;
            out.push_back({x, y, nx, ny, in_image && deriv > t});
        }
    return out;
}

/// Blobby random mask: a few rectangles plus pixel noise.
inline Mask random_blob(std::mt19937& rng, int w, int h) {
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1), side(2, 8);
    Mask m(w, h);
    const int rects = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int r = 0; r < rects; ++r) m |= testutil::rect_mask(w, h, ux(rng), uy(rng), ux(rng) + side(rng), uy(rng) + side(rng));
    m |= testutil::random_mask(rng, w, h, 0.05);
    if (m.empty()) m.set(w / 2, h / 2);
    return m;
}

inline NearnessMap random_field(std::mt19937& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    NearnessMap z(w, h);
    // A smooth ramp plus a random occluder patch plus noise.
    const float gx = u(rng) - 0.5f, gy = u(rng) - 0.5f;
    const int ox = int(u(rng) * w), oy = int(u(rng) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            z(x, y) = 0.02f * (gx * x + gy * y) + 0.1f * u(rng);
            if (x >= ox && x < ox + 5 && y >= oy && y < oy + 5) z(x, y) += 0.8f;
        }
    return z;
}

} // namespace oracle
