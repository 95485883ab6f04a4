#pragma once

#include "tabe/backend.hpp"
#include "tabe/io.hpp"
#include "tabe/trainprep.hpp"
#include "tabe/wire.hpp"

#include <array>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace tabe {

/// Deterministic stand-ins for the neural stages, driven by a synthetic scene's ground truth.
///
///  - segmenter: keys on the scene's flat object colour, which yields the ground-truth visible
///    mask on input frames and the amodal mask on completed object-on-white frames;
///  - depth: returns the scene's nearness for the requested frame index;
///  - outpainter: `oracle` returns the whole object on white, `echo` returns its input unchanged.
///
/// `noisy` is oracle with every segmenter output pixel flipped with probability rho, seeded per frame.
enum class MockMode { Oracle, Echo, Noisy };

inline MockMode parse_mock_mode(const std::string& s) {
    if (s == "oracle") return MockMode::Oracle;
    if (s == "echo") return MockMode::Echo;
    if (s == "noisy") return MockMode::Noisy;
    throw ConfigError("unknown mock mode: " + s);
}

struct MockScene {
    fs::path base_dir;
    int width = 0;
    int height = 0;
    std::array<int, 3> object_color{};
    std::vector<NearnessRef> nearness;
    std::vector<std::string> object_on_white;

    static MockScene load(const fs::path& path) {
        const json j = read_json(path);
        MockScene s;
        s.base_dir = fs::absolute(path).parent_path();
        try {
            if (j.at("schema").get<std::string>() != "tabe-mock-scene/1") throw ConfigError("unsupported mock scene schema");
            s.width = j.at("width").get<int>();
            s.height = j.at("height").get<int>();
            s.object_color = j.at("object_color").get<std::array<int, 3>>();
            for (const auto& f : j.at("frames")) {
                s.nearness.push_back({f.at("nearness").at("data").get<std::string>(),
                                      f.at("nearness").at("header").get<std::string>()});
                s.object_on_white.push_back(f.at("object_on_white").get<std::string>());
            }
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed mock scene: ") + e.what());
        }
        return s;
    }
};

struct MockOptions {
    MockMode mode = MockMode::Oracle;
    double rho = 0.0;
    std::uint64_t seed = 0;
};

class MockBackendServer {
  public:
    MockBackendServer(MockScene scene, MockOptions options) : scene_(std::move(scene)), options_(options) {}

    /// Answers one protocol request; failures become protocol error objects.
    json handle(const json& request) const {
        const std::string id = request.is_object() ? request.value("id", std::string{}) : std::string{};
        try {
            switch (wire::check_envelope(request)) {
            case wire::RequestType::Health: {
                json r = wire::ok_response(id);
                r["status"] = "ok";
                return r;
            }
            case wire::RequestType::Segment: return segment(request, id);
            case wire::RequestType::Depth: return depth(request, id);
            case wire::RequestType::Outpaint: return outpaint(request, id);
            }
        } catch (const std::exception& e) {
            return wire::error_response(id, e.what());
        }
        return wire::error_response(id, "unhandled request");
    }

    /// Newline-delimited JSON loop: one request per input line, one response per output line.
    void serve(std::istream& in, std::ostream& out) const {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json response;
            try {
                response = handle(json::parse(line));
            } catch (const json::parse_error& e) {
                response = wire::error_response("", std::string("malformed JSON: ") + e.what());
            }
            out << response.dump() << '\n' << std::flush;
        }
    }

  private:
    std::size_t frame_slot(int frame_index) const {
        if (frame_index < 0 || frame_index >= static_cast<int>(scene_.nearness.size()))
            throw ValidationError("frame index " + std::to_string(frame_index) + " is outside the mock scene");
        return static_cast<std::size_t>(frame_index);
    }

    Mask key_object(const FrameImage& img) const {
        Mask m(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                bool match = true;
                for (int c = 0; c < 3; ++c)
                    match = match && std::lround(img(x, y, c) * 255.0) == scene_.object_color[static_cast<std::size_t>(c)];
                m.set(x, y, match);
            }
        return m;
    }

    json segment(const json& request, const std::string& id) const {
        const auto req = wire::parse_segment(request);
        const fs::path root = request.at("root").get<std::string>();
        json masks = json::array();
        for (std::size_t k = 0; k < req.frames.size(); ++k) {
            Mask m = key_object(load_image(root / req.frames[k]));
            if (options_.mode == MockMode::Noisy) {
                Rng rng(derive_seed(options_.seed, static_cast<std::uint64_t>(req.frame_indices[k])));
                for (std::size_t i = 0; i < m.size(); ++i)
                    if (rng.bernoulli(options_.rho)) m.set_index(i, !m[i]);
            }
            const std::string rel = (fs::path(req.output_dir) / (frame_stem(req.frame_indices[k]) + ".png")).generic_string();
            save_mask(m, root / rel);
            masks.push_back(rel);
        }
        json r = wire::ok_response(id);
        r["masks"] = std::move(masks);
        return r;
    }

    json depth(const json& request, const std::string& id) const {
        const auto req = wire::parse_depth(request);
        const fs::path root = request.at("root").get<std::string>();
        const auto& ref = scene_.nearness[frame_slot(req.frame_index)];
        const auto map = load_nearness(scene_.base_dir / ref.data, scene_.base_dir / ref.header);
        const std::string data = req.output + ".f32";
        const std::string header = req.output + ".json";
        save_nearness(map, root / data, root / header);
        json r = wire::ok_response(id);
        r["nearness_data"] = data;
        r["nearness_header"] = header;
        return r;
    }

    json outpaint(const json& request, const std::string& id) const {
        const auto req = wire::parse_outpaint(request);
        const fs::path root = request.at("root").get<std::string>();
        json completed = json::array();
        for (std::size_t k = 0; k < req.frames.size(); ++k) {
            const FrameImage out = options_.mode == MockMode::Echo
                                       ? load_image(root / req.frames[k])
                                       : load_image(scene_.base_dir / scene_.object_on_white[frame_slot(req.frame_indices[k])]);
            const std::string rel = (fs::path(req.output_dir) / (frame_stem(req.frame_indices[k]) + ".png")).generic_string();
            save_image(out, root / rel);
            completed.push_back(rel);
        }
        json r = wire::ok_response(id);
        r["completed_frames"] = std::move(completed);
        return r;
    }

    MockScene scene_;
    MockOptions options_;
};

/// In-process endpoints sharing one mock server.
inline BackendSet mock_backends(MockScene scene, MockOptions options) {
    auto server = std::make_shared<MockBackendServer>(std::move(scene), options);
    auto handler = [server](const json& r) { return server->handle(r); };
    return {std::make_shared<InProcessBackend>(handler, "mock-segmenter"),
            std::make_shared<InProcessBackend>(handler, "mock-depth"),
            std::make_shared<InProcessBackend>(handler, "mock-outpainter")};
}

} // namespace tabe
