#pragma once

#include "tabe/backend.hpp"
#include "tabe/bbox.hpp"
#include "tabe/chunks.hpp"
#include "tabe/config.hpp"
#include "tabe/io.hpp"
#include "tabe/occlusion.hpp"
#include "tabe/target_region.hpp"
#include "tabe/trainprep.hpp"
#include "tabe/wire.hpp"

#include <future>
#include <map>
#include <string>
#include <vector>

namespace tabe {

// ---------------------------------------------------------------------------
// Occlusion analysis: verdicts, amodal boxes and target regions for one sequence.
// ---------------------------------------------------------------------------

struct OcclusionAnalysis {
    std::vector<OcclusionVerdict> verdicts;
    std::vector<AmodalBox> boxes;
    std::vector<TargetRegion> target_regions;
};

/// Labels every frame, using interpolated/extrapolated boxes to recognise frames where the object
/// left the image. The first frame is the query frame and counts as unoccluded by definition
/// whenever the object is visible there.
inline std::vector<OcclusionVerdict> label_sequence(const MaskSequence& visible, const std::vector<NearnessMap>& nearness,
                                                    const OcclusionConfig& config) {
    if (visible.empty()) throw ValidationError("label_sequence: empty sequence");
    const VideoGeometry geometry{visible[0].width(), visible[0].height(), static_cast<int>(visible.size())};
    require_sequence_geometry(visible, geometry, "visible masks");
    const auto filled = fill_missing_boxes(observed_boxes(visible), geometry);
    auto verdicts = label_frames(visible, nearness, std::span<const AmodalBox>(filled), config);
    if (!visible[0].empty()) verdicts[0].label = OcclusionLabel::Unoccluded;
    return verdicts;
}

/// One target region per frame; frames that left the image (or whose box misses it) get an empty one.
inline std::vector<TargetRegion> build_target_regions(const MaskSequence& visible, const std::vector<NearnessMap>& nearness,
                                                      const std::vector<OcclusionVerdict>& verdicts,
                                                      const std::vector<AmodalBox>& boxes, ReferenceStatistic stat) {
    if (nearness.size() != visible.size() || verdicts.size() != visible.size() || boxes.size() != visible.size())
        throw ValidationError("build_target_regions: sequence lengths differ");
    std::vector<TargetRegion> out;
    for (std::size_t i = 0; i < visible.size(); ++i) {
        const int w = visible[i].width(), h = visible[i].height();
        const bool usable = verdicts[i].label != OcclusionLabel::OutOfFrame && !clamp_to_image(boxes[i], w, h).empty();
        if (usable) out.push_back(build_target_region(visible[i], nearness[i], boxes[i], stat));
        else out.push_back({static_cast<int>(i), Mask(w, h)});
    }
    return out;
}

inline OcclusionAnalysis analyze_occlusion(const MaskSequence& visible, const std::vector<NearnessMap>& nearness,
                                           const RunConfig& config) {
    OcclusionAnalysis a;
    a.verdicts = label_sequence(visible, nearness, config.occlusion);
    a.boxes = estimate_amodal_boxes(visible, a.verdicts, config.bbox);
    a.target_regions = build_target_regions(visible, nearness, a.verdicts, a.boxes, config.target_statistic);
    return a;
}

/// Re-checks the per-frame invariants of an analysis (used on artifacts re-loaded from disk).
inline void validate_analysis(const MaskSequence& visible, const OcclusionAnalysis& a, const BoxConfig& bbox) {
    if (a.verdicts.size() != visible.size() || a.boxes.size() != visible.size() || a.target_regions.size() != visible.size())
        throw ValidationError("analysis: artifact lengths differ");
    for (std::size_t i = 0; i < visible.size(); ++i) {
        const auto& v = a.verdicts[i];
        if (v.frame_index != static_cast<int>(i)) throw ValidationError("analysis: verdict frame index mismatch");
        if (visible[i].empty() == v.f_occ.has_value()) throw ValidationError("analysis: f_occ defined on an empty mask");
        if (visible[i].empty() && v.label == OcclusionLabel::Unoccluded && i != 0)
            throw ValidationError("analysis: empty frame labelled unoccluded");
        if (!a.boxes[i].valid()) throw ValidationError("analysis: box without extent");
        const auto rect = clamp_to_image(a.boxes[i], visible[i].width(), visible[i].height());
        const auto& region = a.target_regions[i].mask;
        for (int y = 0; y < region.height(); ++y)
            for (int x = 0; x < region.width(); ++x)
                if (region(x, y) && !rect.contains(x, y))
                    throw ValidationError("analysis: target region leaves its box in frame " + std::to_string(i));
        if (bbox.expansion_percent >= 0.0 && v.label != OcclusionLabel::OutOfFrame && !visible[i].is_subset_of(region))
            throw ValidationError("analysis: visible mask not inside target region in frame " + std::to_string(i));
    }
}

// ---------------------------------------------------------------------------
// End-to-end run
// ---------------------------------------------------------------------------

struct PipelineResult {
    MaskSequence visible;
    std::vector<NearnessMap> nearness;
    OcclusionAnalysis analysis;
    std::vector<Chunk> chunks;
    MaskSequence final_masks;
    fs::path output_manifest;
};

namespace pipeline_detail {

inline std::string png(const std::string& dir, int i) { return dir + "/" + frame_stem(i) + ".png"; }

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const BackendError& e) {
        throw BackendError("stage '" + name + "' failed: " + e.what());
    }
}

} // namespace pipeline_detail

/// Query → visible masks → nearness → occlusion analysis → training samples → chunked
/// outpainting → re-segmentation with the original query. Every intermediate is written under
/// `workdir`; JSON artifacts carry no absolute paths or timestamps, so reruns are byte-identical.
inline PipelineResult run_pipeline(const SequenceManifest& manifest, const Mask& query, const BackendSet& backends,
                                   const RunConfig& config, const fs::path& workdir) {
    using pipeline_detail::png;
    using pipeline_detail::stage;
    config.validate();
    const VideoGeometry geometry = manifest.geometry();
    geometry.validate();
    require_same_size(query.width(), query.height(), geometry.width, geometry.height, "query mask");
    if (query.empty()) throw ValidationError("query mask is empty");

    fs::create_directories(workdir);
    const fs::path root = fs::absolute(workdir);
    const std::string root_str = root.string();
    const int n = geometry.frame_count;
    PipelineResult result;
    std::vector<std::string> stages;

    for (const auto& [name, backend] : {std::pair{"segmenter", backends.segmenter},
                                        std::pair{"depth_estimator", backends.depth_estimator},
                                        std::pair{"outpainter", backends.outpainter}}) {
        if (!backend) throw ConfigError(std::string("no backend configured for ") + name);
        health_check(*backend, name);
    }

    // Inputs are staged into the workdir so backends only ever see workdir-relative paths.
    const auto frames = manifest.load_images();
    for (int i = 0; i < n; ++i) save_image(frames[static_cast<std::size_t>(i)], root / png("input/frames", i));
    save_mask(query, root / "input/query.png");
    stages.push_back("stage-inputs");

    auto segment = [&](const std::string& name, const std::vector<std::string>& inputs, const std::string& out_dir) {
        return stage(name, [&] {
            wire::SegmentRequest req;
            req.frames = inputs;
            for (int i = 0; i < n; ++i) req.frame_indices.push_back(i);
            req.query_mask = "input/query.png";
            req.output_dir = out_dir;
            const json resp = round_trip(*backends.segmenter, wire::make_request(req, name, root_str));
            MaskSequence masks;
            for (const auto& rel : resp.at("masks")) masks.push_back(load_mask(root / rel.get<std::string>(), std::pair{geometry.width, geometry.height}));
            return masks;
        });
    };

    std::vector<std::string> input_frames;
    for (int i = 0; i < n; ++i) input_frames.push_back(png("input/frames", i));
    result.visible = segment("segment-visible", input_frames, "visible");
    stages.push_back("segment-visible");
    if (result.visible[0].empty()) throw ValidationError("the object is not visible in the query frame");

    for (int i = 0; i < n; ++i) {
        const std::string name = "depth-" + frame_stem(i);
        result.nearness.push_back(stage(name, [&] {
            const json resp = round_trip(*backends.depth_estimator,
                                       wire::make_request(wire::DepthRequest{png("input/frames", i), i, "nearness/" + frame_stem(i)},
                                                          name, root_str));
            auto map = load_nearness(root / resp.at("nearness_data").get<std::string>(),
                                     root / resp.at("nearness_header").get<std::string>());
            require_same_size(map.width(), map.height(), geometry.width, geometry.height, "depth backend output");
            return map;
        }));
    }
    stages.push_back("depth");

    result.analysis = analyze_occlusion(result.visible, result.nearness, config);
    validate_analysis(result.visible, result.analysis, config.bbox);
    write_json(root / "reasoning/verdicts.json", result.analysis.verdicts);
    write_json(root / "reasoning/boxes.json", result.analysis.boxes);
    for (int i = 0; i < n; ++i)
        save_mask(result.analysis.target_regions[static_cast<std::size_t>(i)].mask, root / png("reasoning/target_regions", i));
    stages.push_back("occlusion-analysis");

    const auto training = build_training_manifest(frames, result.visible, result.analysis.verdicts,
                                                  config.mask_generation, config.token, root / "trainprep", config.finetune);
    stages.push_back("trainprep");

    result.chunks = plan_chunks(result.analysis.verdicts, config.chunks);
    std::vector<std::string> completed(static_cast<std::size_t>(n));
    auto outpaint_chunk = [&](std::size_t c) {
        const auto& chunk = result.chunks[c];
        const std::string name = "outpaint-chunk-" + frame_stem(static_cast<int>(c));
        return stage(name, [&] {
            wire::OutpaintRequest req;
            for (int i = chunk.start; i <= chunk.end; ++i) {
                req.frames.push_back(png("trainprep/images", i));
                req.frame_indices.push_back(i);
                req.visible_masks.push_back(png("visible", i));
                req.target_regions.push_back(png("reasoning/target_regions", i));
            }
            req.prompt = training.manifest.prompt;
            req.finetune_manifest = "trainprep/finetune_manifest.json";
            req.output_dir = "completed/chunk_" + frame_stem(static_cast<int>(c));
            return round_trip(*backends.outpainter, wire::make_request(req, name, root_str));
        });
    };
    std::vector<json> responses(result.chunks.size());
    if (config.chunks.concurrent) {
        std::vector<std::future<json>> pending;
        for (std::size_t c = 0; c < result.chunks.size(); ++c)
            pending.push_back(std::async(std::launch::async, outpaint_chunk, c));
        for (std::size_t c = 0; c < pending.size(); ++c) responses[c] = pending[c].get();
    } else {
        for (std::size_t c = 0; c < result.chunks.size(); ++c) responses[c] = outpaint_chunk(c);
    }
    for (std::size_t c = 0; c < result.chunks.size(); ++c) {
        const auto& files = responses[c].at("completed_frames");
        for (int i = result.chunks[c].start; i <= result.chunks[c].end; ++i) {
            const std::string rel = files.at(static_cast<std::size_t>(i - result.chunks[c].start)).get<std::string>();
            load_image(root / rel, std::pair{geometry.width, geometry.height});
            completed[static_cast<std::size_t>(i)] = rel;
        }
    }
    stages.push_back("outpaint");

    result.final_masks = segment("segment-final", completed, "final");
    stages.push_back("segment-final");

    SequenceManifest out;
    out.base_dir = root;
    out.width = geometry.width;
    out.height = geometry.height;
    for (int i = 0; i < n; ++i) {
        FrameEntry f;
        f.image = png("input/frames", i);
        f.visible_mask = png("visible", i);
        f.nearness = NearnessRef{"nearness/" + frame_stem(i) + ".f32", "nearness/" + frame_stem(i) + ".json"};
        f.amodal_mask = png("final", i);
        out.frames.push_back(std::move(f));
    }
    out.verdicts = result.analysis.verdicts;
    out.boxes = result.analysis.boxes;
    result.output_manifest = root / "output_manifest.json";
    out.save(result.output_manifest);

    std::map<std::string, int> label_counts;
    for (const auto& v : result.analysis.verdicts) ++label_counts[to_string(v.label)];
    write_json(root / "run_metadata.json", {{"schema", "tabe-run/1"},
                                            {"width", geometry.width},
                                            {"height", geometry.height},
                                            {"frame_count", n},
                                            {"config", config},
                                            {"chunks", result.chunks},
                                            {"labels", label_counts},
                                            {"stages", stages},
                                            {"output_manifest", "output_manifest.json"}});
    return result;
}

} // namespace tabe
