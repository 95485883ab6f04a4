#pragma once

#include "tabe/occlusion.hpp"

#include <algorithm>
#include <vector>

#include "json.hpp"

namespace tabe {

struct ChunkConfig {
    int target_length = 16;
    int max_length = 64;
    bool concurrent = false;

    void validate() const {
        if (target_length < 1) throw ConfigError("chunk target length must be >= 1");
        if (max_length < target_length) throw ConfigError("chunk max length must be >= target length");
    }
};

/// Contiguous frame run [start, end] (inclusive) sent to the outpainter in one call.
struct Chunk {
    int start = 0;
    int end = 0;
    /// Set when no unoccluded frame was available within max_length of the previous start,
    /// so this chunk begins on an occluded frame.
    bool fallback_start = false;

    int length() const { return end - start + 1; }
    bool operator==(const Chunk&) const = default;
};

inline void to_json(nlohmann::json& j, const Chunk& c) {
    j = {{"start", c.start}, {"end", c.end}, {"fallback_start", c.fallback_start}};
}

/// Partitions the sequence into chunks that start on unoccluded frames.
///
/// Greedy-earliest: from start s the next start is the earliest unoccluded frame j with
/// s+target <= j <= s+max, so a chunk stretches past the target length only while no unoccluded
/// frame is available. With no such j the chunk runs to the end if that fits in max; otherwise it is
/// cut at max and the next chunk begins wherever the cut lands (flagged as a fallback start).
inline std::vector<Chunk> plan_chunks(const std::vector<OcclusionVerdict>& verdicts, const ChunkConfig& config = {}) {
    config.validate();
    const int n = static_cast<int>(verdicts.size());
    if (n == 0) throw ValidationError("plan_chunks: empty sequence");
    if (verdicts[0].label != OcclusionLabel::Unoccluded) throw ValidationError("plan_chunks: frame 0 must be unoccluded");
    auto unoccluded = [&](int i) { return verdicts[static_cast<std::size_t>(i)].label == OcclusionLabel::Unoccluded; };

    std::vector<Chunk> out;
    int start = 0;
    bool fallback = false;
    while (start < n) {
        int next = -1;
        for (int j = start + config.target_length; j <= std::min(n - 1, start + config.max_length); ++j)
            if (unoccluded(j)) {
                next = j;
                break;
            }
        if (next >= 0) {
            out.push_back({start, next - 1, fallback});
            start = next;
            fallback = false;
        } else if (n - start <= config.max_length) {
            out.push_back({start, n - 1, fallback});
            break;
        } else {
            out.push_back({start, start + config.max_length - 1, fallback});
            start += config.max_length;
            fallback = !unoccluded(start);
        }
    }
    return out;
}

} // namespace tabe
