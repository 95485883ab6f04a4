#pragma once

#include "tabe/types.hpp"

#include <string>
#include <vector>

#include "json.hpp"

// Wire protocol between the orchestrator and the neural backends.
//
// Requests and responses are single JSON objects. Over a subprocess they travel as one object
// per line (newline-delimited JSON); over HTTP as the POST body to `<address>/<type>`.
// Pixel data never travels inline: every file is named by a path relative to `root`.
// The frozen schema lives in docs/wire_protocol_v1.json.

namespace tabe::wire {

using json = nlohmann::json;

inline constexpr const char* kProtocol = "tabe-wire/1";

enum class RequestType { Health, Segment, Depth, Outpaint };

inline const char* to_string(RequestType t) {
    switch (t) {
    case RequestType::Health: return "health";
    case RequestType::Segment: return "segment";
    case RequestType::Depth: return "depth";
    case RequestType::Outpaint: return "outpaint";
    }
    return "?";
}

inline RequestType parse_request_type(const std::string& s) {
    if (s == "health") return RequestType::Health;
    if (s == "segment") return RequestType::Segment;
    if (s == "depth") return RequestType::Depth;
    if (s == "outpaint") return RequestType::Outpaint;
    throw ValidationError("unknown request type: " + s);
}

struct SegmentRequest {
    std::vector<std::string> frames;
    std::vector<int> frame_indices;
    std::string query_mask;
    std::string output_dir;
};

struct DepthRequest {
    std::string frame;
    int frame_index = 0;
    /// Output stem; the backend writes `<output>.f32` and `<output>.json`.
    std::string output;
};

struct OutpaintRequest {
    std::vector<std::string> frames; ///< visible object isolated on white
    std::vector<int> frame_indices;
    std::vector<std::string> visible_masks;
    std::vector<std::string> target_regions;
    std::string prompt;
    std::string finetune_manifest;
    std::string output_dir;
};

namespace detail {

inline void require(const json& j, const char* key, json::value_t type, const char* where) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string(where) + ": missing field '" + key + "'");
    const auto t = j.at(key).type();
    const bool ok = t == type || (type == json::value_t::number_integer && t == json::value_t::number_unsigned);
    if (!ok) throw ValidationError(std::string(where) + ": field '" + key + "' has the wrong type");
}

inline std::vector<std::string> string_array(const json& j, const char* key, const char* where) {
    require(j, key, json::value_t::array, where);
    std::vector<std::string> out;
    for (const auto& e : j.at(key)) {
        if (!e.is_string()) throw ValidationError(std::string(where) + ": '" + key + "' must hold strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline std::vector<int> int_array(const json& j, const char* key, const char* where) {
    require(j, key, json::value_t::array, where);
    std::vector<int> out;
    for (const auto& e : j.at(key)) {
        if (!e.is_number_integer()) throw ValidationError(std::string(where) + ": '" + key + "' must hold integers");
        out.push_back(e.get<int>());
    }
    return out;
}

inline std::string string_field(const json& j, const char* key, const char* where) {
    require(j, key, json::value_t::string, where);
    return j.at(key).get<std::string>();
}

} // namespace detail

inline json envelope(RequestType type, const std::string& id, const std::string& root) {
    return {{"protocol", kProtocol}, {"type", to_string(type)}, {"id", id}, {"root", root}};
}

inline json make_health(const std::string& id) {
    json j = envelope(RequestType::Health, id, "");
    j.erase("root"); // health checks touch no files
    return j;
}

inline json make_request(const SegmentRequest& r, const std::string& id, const std::string& root) {
    json j = envelope(RequestType::Segment, id, root);
    j["frames"] = r.frames;
    j["frame_indices"] = r.frame_indices;
    j["query_mask"] = r.query_mask;
    j["output_dir"] = r.output_dir;
    return j;
}

inline json make_request(const DepthRequest& r, const std::string& id, const std::string& root) {
    json j = envelope(RequestType::Depth, id, root);
    j["frame"] = r.frame;
    j["frame_index"] = r.frame_index;
    j["output"] = r.output;
    return j;
}

inline json make_request(const OutpaintRequest& r, const std::string& id, const std::string& root) {
    json j = envelope(RequestType::Outpaint, id, root);
    j["frames"] = r.frames;
    j["frame_indices"] = r.frame_indices;
    j["visible_masks"] = r.visible_masks;
    j["target_regions"] = r.target_regions;
    j["prompt"] = r.prompt;
    j["finetune_manifest"] = r.finetune_manifest;
    j["output_dir"] = r.output_dir;
    return j;
}

/// Validates the envelope and returns the request type.
inline RequestType check_envelope(const json& j) {
    constexpr const char* where = "request";
    if (detail::string_field(j, "protocol", where) != kProtocol) throw ValidationError("unsupported protocol version");
    detail::require(j, "id", json::value_t::string, where);
    const auto type = parse_request_type(detail::string_field(j, "type", where));
    if (type != RequestType::Health) detail::require(j, "root", json::value_t::string, where);
    return type;
}

inline SegmentRequest parse_segment(const json& j) {
    constexpr const char* where = "segment request";
    SegmentRequest r{detail::string_array(j, "frames", where), detail::int_array(j, "frame_indices", where),
                     detail::string_field(j, "query_mask", where), detail::string_field(j, "output_dir", where)};
    if (r.frames.empty() || r.frames.size() != r.frame_indices.size())
        throw ValidationError("segment request: frames and frame_indices must be non-empty and equally long");
    return r;
}

inline DepthRequest parse_depth(const json& j) {
    constexpr const char* where = "depth request";
    detail::require(j, "frame_index", json::value_t::number_integer, where);
    return {detail::string_field(j, "frame", where), j.at("frame_index").get<int>(), detail::string_field(j, "output", where)};
}

inline OutpaintRequest parse_outpaint(const json& j) {
    constexpr const char* where = "outpaint request";
    OutpaintRequest r{detail::string_array(j, "frames", where),
                      detail::int_array(j, "frame_indices", where),
                      detail::string_array(j, "visible_masks", where),
                      detail::string_array(j, "target_regions", where),
                      detail::string_field(j, "prompt", where),
                      detail::string_field(j, "finetune_manifest", where),
                      detail::string_field(j, "output_dir", where)};
    const auto n = r.frames.size();
    if (n == 0 || r.frame_indices.size() != n || r.visible_masks.size() != n || r.target_regions.size() != n)
        throw ValidationError("outpaint request: per-frame lists must be non-empty and equally long");
    return r;
}

inline json error_response(const std::string& id, const std::string& message) {
    return {{"protocol", kProtocol}, {"id", id}, {"error", {{"message", message}}}};
}

inline json ok_response(const std::string& id) { return {{"protocol", kProtocol}, {"id", id}}; }

/// Validates a response against the schema for `type`; throws BackendError naming the violation.
inline void check_response(RequestType type, const json& request, const json& response) {
    const std::string where = std::string(to_string(type)) + " response";
    try {
        if (!response.is_object()) throw ValidationError(where + ": not a JSON object");
        if (response.contains("error")) {
            const auto& e = response.at("error");
            throw BackendError(where + ": backend error: " +
                               (e.is_object() && e.contains("message") ? e.at("message").dump() : e.dump()));
        }
        if (detail::string_field(response, "protocol", where.c_str()) != kProtocol)
            throw ValidationError(where + ": protocol mismatch");
        if (detail::string_field(response, "id", where.c_str()) != request.at("id").get<std::string>())
            throw ValidationError(where + ": id does not match the request");
        switch (type) {
        case RequestType::Health:
            if (detail::string_field(response, "status", where.c_str()) != "ok")
                throw ValidationError(where + ": status is not ok");
            break;
        case RequestType::Segment: {
            const auto masks = detail::string_array(response, "masks", where.c_str());
            if (masks.size() != request.at("frames").size()) throw ValidationError(where + ": wrong number of masks");
            break;
        }
        case RequestType::Depth:
            detail::string_field(response, "nearness_data", where.c_str());
            detail::string_field(response, "nearness_header", where.c_str());
            break;
        case RequestType::Outpaint: {
            const auto frames = detail::string_array(response, "completed_frames", where.c_str());
            if (frames.size() != request.at("frames").size())
                throw ValidationError(where + ": wrong number of completed frames");
            break;
        }
        }
    } catch (const ValidationError& e) {
        throw BackendError(std::string("protocol violation: ") + e.what());
    }
}

} // namespace tabe::wire
