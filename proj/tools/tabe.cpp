// tabe: command-line entry point for the amodal segmentation toolkit.
#include "tabe/tabe.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

using namespace tabe;

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kBackend = 3, kValidation = 4 };

/// Flags every subcommand accepts.
struct Common {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out;
};

void add_common(CLI::App* sub, Common& c, const std::string& out_names, const std::string& out_help) {
    sub->add_option("--seed", c.seed, "Random seed (overrides the config file)");
    sub->add_option("--config", c.config, "Run config JSON; explicit flags override its values");
    sub->add_option(out_names, c.out, out_help);
}

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& target) {
    if (flag) target = static_cast<U>(*flag);
}

RunConfig base_config(const Common& c, const std::string& subcommand) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    cfg.subcommand = subcommand;
    apply(c.seed, cfg.seed);
    cfg.mask_generation.seed = cfg.seed;
    cfg.output = c.out;
    return cfg;
}

/// `dir/effective_config.json` for directory outputs, `<stem>.effective_config.json` beside files.
void write_effective_config(const RunConfig& cfg, const fs::path& out, bool is_dir) {
    const fs::path p = is_dir ? out / "effective_config.json"
                              : out.parent_path() / (out.stem().string() + ".effective_config.json");
    write_json(p, cfg);
}

fs::path require_out(const std::string& out, const char* fallback) { return out.empty() ? fs::path(fallback) : fs::path(out); }

// ---------------------------------------------------------------------------

struct OcclusionFlags {
    std::string manifest;
    std::optional<double> t, tau;
    std::optional<double> probe_distance;
    std::optional<int> connectivity;
    bool no_normalize = false;
};

void add_occlusion_flags(CLI::App* sub, OcclusionFlags& f) {
    sub->add_option("--t", f.t, "Directional-derivative threshold t (default 0.05)");
    sub->add_option("--tau", f.tau, "Occlusion-fraction threshold tau (default 0.2)");
    sub->add_option("--probe-distance", f.probe_distance, "Finite-difference probe distance in pixels (default 2)");
    sub->add_option("--connectivity", f.connectivity, "Boundary connectivity, 4 or 8 (default 4)");
    sub->add_flag("--no-normalize", f.no_normalize, "Use raw nearness instead of per-frame min-max normalization");
}

void apply_occlusion_flags(const OcclusionFlags& f, RunConfig& cfg) {
    apply(f.t, cfg.occlusion.derivative_threshold);
    apply(f.tau, cfg.occlusion.occlusion_fraction_threshold);
    apply(f.probe_distance, cfg.occlusion.probe_distance);
    if (f.connectivity) {
        if (*f.connectivity != 4 && *f.connectivity != 8) throw ConfigError("--connectivity must be 4 or 8");
        cfg.occlusion.boundary_connectivity = *f.connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
    }
    if (f.no_normalize) cfg.occlusion.normalize_nearness = false;
}

std::vector<OcclusionVerdict> load_or_label(const std::string& verdicts_path, const SequenceManifest& m,
                                            const MaskSequence& visible, const RunConfig& cfg) {
    if (!verdicts_path.empty()) {
        try {
            auto v = read_json(verdicts_path).get<std::vector<OcclusionVerdict>>();
            if (v.size() != visible.size()) throw ValidationError("verdicts do not match the manifest's frame count");
            return v;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed verdicts file: ") + e.what());
        }
    }
    return label_sequence(visible, m.load_nearness_maps(), cfg.occlusion);
}

void print_labels(const std::vector<OcclusionVerdict>& verdicts) {
    int counts[3] = {0, 0, 0};
    for (const auto& v : verdicts) ++counts[static_cast<int>(v.label)];
    std::printf("%zu frames: %d unoccluded, %d occluded, %d out of frame\n", verdicts.size(), counts[0], counts[1], counts[2]);
}

// ---------------------------------------------------------------------------

int run_occlusion(const Common& c, const OcclusionFlags& f) {
    RunConfig cfg = base_config(c, "occlusion");
    apply_occlusion_flags(f, cfg);
    cfg.inputs["manifest"] = f.manifest;
    cfg.validate();
    const auto m = SequenceManifest::load(f.manifest);
    const auto verdicts = label_sequence(m.load_visible(), m.load_nearness_maps(), cfg.occlusion);
    const fs::path out = require_out(c.out, "verdicts.json");
    write_json(out, verdicts);
    write_effective_config(cfg, out, false);
    print_labels(verdicts);
    return kOk;
}

struct BoxFlags {
    std::string manifest, verdicts;
    std::optional<double> expand, area_drop;
    std::optional<int> window;
};

int run_bbox(const Common& c, const BoxFlags& f, const OcclusionFlags& of) {
    RunConfig cfg = base_config(c, "bbox");
    apply_occlusion_flags(of, cfg);
    apply(f.expand, cfg.bbox.expansion_percent);
    apply(f.area_drop, cfg.bbox.area_drop_fraction);
    apply(f.window, cfg.bbox.window);
    cfg.inputs["manifest"] = f.manifest;
    if (!f.verdicts.empty()) cfg.inputs["verdicts"] = f.verdicts;
    cfg.validate();
    const auto m = SequenceManifest::load(f.manifest);
    const auto visible = m.load_visible();
    const auto verdicts = load_or_label(f.verdicts, m, visible, cfg);
    const auto boxes = estimate_amodal_boxes(visible, verdicts, cfg.bbox);
    const fs::path out = require_out(c.out, "boxes.json");
    write_json(out, boxes);
    write_effective_config(cfg, out, false);
    int grown = 0;
    for (const auto& b : boxes) grown += b.provenance == BoxProvenance::Grown;
    std::printf("%zu boxes (%d grown for occlusion)\n", boxes.size(), grown);
    return kOk;
}

struct TargetFlags {
    std::string manifest, boxes, verdicts;
    std::optional<std::string> statistic;
};

int run_target_region(const Common& c, const TargetFlags& f, const OcclusionFlags& of) {
    RunConfig cfg = base_config(c, "target-region");
    apply_occlusion_flags(of, cfg);
    if (f.statistic) {
        if (*f.statistic != "mean" && *f.statistic != "median") throw ConfigError("--statistic must be mean or median");
        cfg.target_statistic = *f.statistic == "mean" ? ReferenceStatistic::Mean : ReferenceStatistic::Median;
    }
    cfg.inputs["manifest"] = f.manifest;
    cfg.inputs["boxes"] = f.boxes;
    if (!f.verdicts.empty()) cfg.inputs["verdicts"] = f.verdicts;
    cfg.validate();
    const auto m = SequenceManifest::load(f.manifest);
    const auto visible = m.load_visible();
    const auto nearness = m.load_nearness_maps();
    std::vector<AmodalBox> boxes;
    try {
        boxes = read_json(f.boxes).get<std::vector<AmodalBox>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed boxes file: ") + e.what());
    }
    const auto verdicts = load_or_label(f.verdicts, m, visible, cfg);
    const auto regions = build_target_regions(visible, nearness, verdicts, boxes, cfg.target_statistic);
    const fs::path out = require_out(c.out, "target_regions");
    json index = json::array();
    for (const auto& r : regions) {
        const std::string name = frame_stem(r.frame_index) + ".png";
        save_mask(r.mask, out / name);
        index.push_back({{"frame", r.frame_index}, {"mask", name}, {"area", r.mask.area()}});
    }
    write_json(out / "index.json", index);
    write_effective_config(cfg, out, true);
    std::printf("%zu target regions written to %s\n", regions.size(), out.string().c_str());
    return kOk;
}

// ---------------------------------------------------------------------------
// composite: scene.json lists the clips by frame, with per-clip integer offsets.
//
// { "clean_plate": "cp.png" | ["cp/0000.png", ...],
//   "background": [...], "foreground": [...], "alpha": [...], "gt_amodal": [...],
//   "offsets": {"clean_plate": 0, "background": 0, "foreground": 0} }
//
// Output frame i uses background[i + offsets.background] (with gt_amodal at the same index) and
// foreground[i + offsets.foreground] (with alpha at the same index).
// ---------------------------------------------------------------------------

struct CompositeFlags {
    std::string scene;
    std::optional<double> alpha_cut, alpha_min;
    bool verbatim_eq = false;
};

int run_composite(const Common& c, const CompositeFlags& f) {
    RunConfig cfg = base_config(c, "composite");
    apply(f.alpha_cut, cfg.alpha_cut);
    apply(f.alpha_min, cfg.compositor.alpha_min);
    if (f.verbatim_eq) cfg.compositor.verbatim_equation = true;
    cfg.inputs["scene"] = f.scene;
    cfg.validate();

    const json j = read_json(f.scene);
    const fs::path base = fs::absolute(f.scene).parent_path();
    std::vector<std::string> plates, bg, fg, alpha, amodal;
    int off_cp = 0, off_bg = 0, off_fg = 0;
    try {
        const auto& cp = j.at("clean_plate");
        plates = cp.is_string() ? std::vector<std::string>{cp.get<std::string>()} : cp.get<std::vector<std::string>>();
        bg = j.at("background").get<std::vector<std::string>>();
        fg = j.at("foreground").get<std::vector<std::string>>();
        alpha = j.at("alpha").get<std::vector<std::string>>();
        amodal = j.at("gt_amodal").get<std::vector<std::string>>();
        if (j.contains("offsets")) {
            const auto& o = j.at("offsets");
            off_cp = o.value("clean_plate", 0);
            off_bg = o.value("background", 0);
            off_fg = o.value("foreground", 0);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed composite scene: ") + e.what());
    }
    if (bg.size() != amodal.size()) throw ConfigError("composite scene: background and gt_amodal lengths differ");
    if (fg.size() != alpha.size()) throw ConfigError("composite scene: foreground and alpha lengths differ");
    if (off_cp < 0 || off_bg < 0 || off_fg < 0) throw ConfigError("composite scene: offsets must be >= 0");
    long n = std::min<long>(static_cast<long>(bg.size()) - off_bg, static_cast<long>(fg.size()) - off_fg);
    if (plates.size() > 1) n = std::min<long>(n, static_cast<long>(plates.size()) - off_cp);
    if (n < 1) throw ConfigError("composite scene: no frames left after applying offsets");

    const fs::path out = require_out(c.out, "composite");
    SequenceManifest man;
    man.base_dir = out;
    for (int i = 0; i < n; ++i) {
        CompositeScene s;
        s.clean_plate = load_image(base / plates[plates.size() == 1 ? 0 : static_cast<std::size_t>(i + off_cp)]);
        const auto size = std::pair{s.clean_plate.width(), s.clean_plate.height()};
        s.background_with_object = load_image(base / bg[static_cast<std::size_t>(i + off_bg)], size);
        s.gt_amodal = load_mask(base / amodal[static_cast<std::size_t>(i + off_bg)], size);
        s.foreground_with_occluder = load_image(base / fg[static_cast<std::size_t>(i + off_fg)], size);
        s.alpha = load_alpha(base / alpha[static_cast<std::size_t>(i + off_fg)]);
        s.validate();
        const std::string stem = frame_stem(i);
        FrameEntry e;
        e.image = "frames/" + stem + ".png";
        e.gt_amodal = "gt_amodal/" + stem + ".png";
        e.gt_visible = "gt_visible/" + stem + ".png";
        save_image(composite(s, cfg.compositor), out / *e.image);
        save_mask(s.gt_amodal, out / *e.gt_amodal);
        save_mask(derive_visible_mask(s, cfg.alpha_cut), out / *e.gt_visible);
        man.width = size.first;
        man.height = size.second;
        man.frames.push_back(std::move(e));
    }
    man.save(out / "manifest.json");
    write_effective_config(cfg, out, true);
    std::printf("%ld composited frames written to %s\n", n, out.string().c_str());
    return kOk;
}

// ---------------------------------------------------------------------------

struct TrainprepFlags {
    std::string manifest, verdicts;
    std::optional<std::string> token;
};

int run_trainprep(const Common& c, const TrainprepFlags& f, const OcclusionFlags& of) {
    RunConfig cfg = base_config(c, "trainprep");
    apply_occlusion_flags(of, cfg);
    apply(f.token, cfg.token);
    cfg.inputs["manifest"] = f.manifest;
    if (!f.verdicts.empty()) cfg.inputs["verdicts"] = f.verdicts;
    cfg.validate();
    const auto m = SequenceManifest::load(f.manifest);
    const auto visible = m.load_visible();
    const auto verdicts = load_or_label(f.verdicts, m, visible, cfg);
    const fs::path out = require_out(c.out, "trainprep");
    const auto set = build_training_manifest(m.load_images(), visible, verdicts, cfg.mask_generation, cfg.token, out,
                                             cfg.finetune);
    write_effective_config(cfg, out, true);
    int trainable = 0;
    for (const auto& s : set.samples) trainable += s.v;
    std::printf("%zu samples (%d with V = 1), prompt \"%s\"\n", set.samples.size(), trainable, set.manifest.prompt.c_str());
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvalFlags {
    std::vector<std::string> pred, gt, names;
};

std::string default_name(const std::string& manifest_path) {
    const auto parent = fs::path(manifest_path).parent_path().filename().string();
    return parent.empty() ? fs::path(manifest_path).stem().string() : parent;
}

int run_eval(const Common& c, const EvalFlags& f) {
    RunConfig cfg = base_config(c, "eval");
    if (f.pred.empty()) throw ConfigError("--pred-manifest is required");
    if (f.gt.size() != f.pred.size()) throw ConfigError("give one --gt-manifest per --pred-manifest");
    if (!f.names.empty() && f.names.size() != f.pred.size()) throw ConfigError("give one --name per --pred-manifest");
    std::vector<EvalReport> reports;
    for (std::size_t k = 0; k < f.pred.size(); ++k) {
        cfg.inputs["pred_manifest_" + std::to_string(k)] = f.pred[k];
        cfg.inputs["gt_manifest_" + std::to_string(k)] = f.gt[k];
        const auto pm = SequenceManifest::load(f.pred[k]);
        const auto gm = SequenceManifest::load(f.gt[k]);
        if (pm.geometry().width != gm.geometry().width || pm.geometry().height != gm.geometry().height ||
            pm.frames.size() != gm.frames.size())
            throw ValidationError("prediction and ground-truth manifests differ in geometry");
        gm.validate();
        reports.push_back(evaluate_sequence(pm.load_amodal(), gm.load_gt_amodal(), gm.load_gt_visible(),
                                            f.names.empty() ? default_name(f.pred[k]) : f.names[k]));
    }
    const auto dataset = aggregate(std::move(reports));
    json j = dataset;
    j["table"] = results_table_json(dataset);
    const fs::path out = require_out(c.out, "report.json");
    write_json(out, j);
    write_effective_config(cfg, out, false);
    std::cout << format_results_table(dataset);
    return kOk;
}

int run_stats(const Common& c, const std::vector<std::string>& gt) {
    RunConfig cfg = base_config(c, "stats");
    if (gt.empty()) throw ConfigError("--gt-manifest is required");
    std::vector<std::pair<MaskSequence, MaskSequence>> seqs;
    for (std::size_t k = 0; k < gt.size(); ++k) {
        cfg.inputs["gt_manifest_" + std::to_string(k)] = gt[k];
        const auto m = SequenceManifest::load(gt[k]);
        m.validate();
        seqs.emplace_back(m.load_gt_amodal(), m.load_gt_visible());
    }
    const auto stats = dataset_statistics(seqs);
    const fs::path out = require_out(c.out, "stats.json");
    write_json(out, statistics_json(stats));
    write_effective_config(cfg, out, false);
    std::cout << format_statistics_table(stats);
    return kOk;
}

// ---------------------------------------------------------------------------

struct PipelineFlags {
    std::string manifest, query, backends, mock_scene;
    std::string mock_mode = "oracle";
    double mock_rho = 0.0;
    std::optional<int> chunk_len, max_chunk_len;
    std::optional<double> bbox_expand;
    std::optional<std::string> token;
    bool concurrent = false;
};

int run_pipeline_cmd(const Common& c, const PipelineFlags& f, const OcclusionFlags& of) {
    RunConfig cfg = base_config(c, "pipeline run");
    apply_occlusion_flags(of, cfg);
    apply(f.chunk_len, cfg.chunks.target_length);
    apply(f.max_chunk_len, cfg.chunks.max_length);
    apply(f.bbox_expand, cfg.bbox.expansion_percent);
    apply(f.token, cfg.token);
    if (f.concurrent) cfg.chunks.concurrent = true;
    cfg.inputs["manifest"] = f.manifest;
    cfg.inputs["query"] = f.query;
    if (f.backends.empty() == f.mock_scene.empty()) throw ConfigError("give exactly one of --backends and --mock");
    BackendSet backends;
    if (!f.backends.empty()) {
        cfg.inputs["backends"] = f.backends;
        backends = connect(parse_endpoints(read_json(f.backends)));
    } else {
        cfg.inputs["mock"] = f.mock_scene;
        cfg.inputs["mock_mode"] = f.mock_mode;
        backends = mock_backends(MockScene::load(f.mock_scene), {parse_mock_mode(f.mock_mode), f.mock_rho, cfg.seed});
    }
    cfg.validate();
    const auto m = SequenceManifest::load(f.manifest);
    const Mask query = load_mask(f.query, std::pair{m.width, m.height});
    const fs::path out = require_out(c.out, "tabe_run");
    const auto result = run_pipeline(m, query, backends, cfg, out);
    write_effective_config(cfg, out, true);
    print_labels(result.analysis.verdicts);
    std::printf("%zu chunks; final masks in %s\n", result.chunks.size(), (out / "final").string().c_str());
    return kOk;
}

// ---------------------------------------------------------------------------

struct RenderFlags {
    std::string manifest, pred;
    double opacity = 0.5;
};

int run_render(const Common& c, const RenderFlags& f) {
    RunConfig cfg = base_config(c, "render");
    cfg.inputs["manifest"] = f.manifest;
    if (!f.pred.empty()) cfg.inputs["pred_manifest"] = f.pred;
    const auto m = SequenceManifest::load(f.manifest);
    const auto frames = m.load_images();
    const bool has_gt = !m.frames.empty() && m.frames[0].gt_amodal && m.frames[0].gt_visible;
    MaskSequence amodal, visible, pred;
    if (has_gt) {
        amodal = m.load_gt_amodal();
        visible = m.load_gt_visible();
    }
    if (!f.pred.empty()) {
        pred = SequenceManifest::load(f.pred).load_amodal();
        if (pred.size() != frames.size()) throw ValidationError("prediction manifest has a different frame count");
    } else if (m.frames[0].amodal_mask) {
        pred = m.load_amodal();
    }
    const fs::path out = require_out(c.out, "renders");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::vector<OverlayLayer> layers;
        if (has_gt) {
            layers.push_back({amodal[i], kAmodalColor, f.opacity});
            layers.push_back({visible[i], kVisibleColor, f.opacity});
        }
        if (!pred.empty()) layers.push_back({pred[i], kPredictionColor, f.opacity});
        save_image(render_overlay(frames[i], layers), out / (frame_stem(static_cast<int>(i)) + ".png"));
    }
    write_effective_config(cfg, out, true);
    std::printf("%zu overlays written to %s\n", frames.size(), out.string().c_str());
    return kOk;
}

struct SynthFlags {
    int frames = 30, width = 64, height = 48;
};

int run_synth(const Common& c, const SynthFlags& f) {
    RunConfig cfg = base_config(c, "synth");
    const fs::path out = require_out(c.out, "synthetic");
    const auto scene = generate_synthetic_scene({f.width, f.height, f.frames, cfg.seed});
    const auto manifest = write_synthetic_scene(scene, out);
    write_effective_config(cfg, out, true);
    std::printf("synthetic scene written to %s\n", manifest.string().c_str());
    return kOk;
}

struct MockFlags {
    std::string scene;
    std::string mode = "oracle";
    double rho = 0.0;
    std::string listen;
};

int run_mock_backend(const Common& c, const MockFlags& f) {
    const RunConfig cfg = base_config(c, "mock-backend");
    const MockBackendServer server(MockScene::load(f.scene), {parse_mock_mode(f.mode), f.rho, cfg.seed});
    if (f.listen.empty()) {
        server.serve(std::cin, std::cout);
        return kOk;
    }
    const auto colon = f.listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--listen expects host:port");
    const std::string host = f.listen.substr(0, colon);
    const int port = std::stoi(f.listen.substr(colon + 1));
    httplib::Server http;
    http.Post(R"(/(\w+))", [&](const httplib::Request& req, httplib::Response& res) {
        json response;
        try {
            response = server.handle(json::parse(req.body));
        } catch (const json::parse_error& e) {
            response = wire::error_response("", std::string("malformed JSON: ") + e.what());
        }
        res.set_content(response.dump(), "application/json");
    });
    if (!http.listen(host, port)) throw ConfigError("cannot listen on " + f.listen);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot amodal video segmentation toolkit: occlusion reasoning, amodal boxes, target regions, "
                 "compositing, fine-tune preparation, chunked orchestration and evaluation."};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tabe 1.0");

    Common common;
    OcclusionFlags occ;

    auto* occlusion = app.add_subcommand("occlusion", "Label every frame unoccluded / occluded / out of frame");
    add_common(occlusion, common, "--out", "Verdicts JSON (default verdicts.json)");
    occlusion->add_option("--manifest", occ.manifest, "Sequence manifest with visible masks and nearness")->required();
    add_occlusion_flags(occlusion, occ);

    BoxFlags box;
    auto* bbox = app.add_subcommand("bbox", "Estimate amodal bounding boxes");
    add_common(bbox, common, "--out", "Boxes JSON (default boxes.json)");
    bbox->add_option("--manifest", box.manifest, "Sequence manifest with visible masks and nearness")->required();
    bbox->add_option("--verdicts", box.verdicts, "Verdicts JSON (computed from the manifest when absent)");
    bbox->add_option("--expand", box.expand, "Uniform box expansion in percent (negative shrinks)");
    bbox->add_option("--area-drop", box.area_drop, "Area drop fraction that triggers growth (default 0.25)");
    bbox->add_option("--window", box.window, "Frames of history for the area comparison (default 5)");
    add_occlusion_flags(bbox, occ);

    TargetFlags target;
    auto* region = app.add_subcommand("target-region", "Build outpainting target regions");
    add_common(region, common, "--out,--out-dir", "Output directory (default target_regions)");
    region->add_option("--manifest", target.manifest, "Sequence manifest with visible masks and nearness")->required();
    region->add_option("--boxes", target.boxes, "Boxes JSON from `tabe bbox`")->required();
    region->add_option("--verdicts", target.verdicts, "Verdicts JSON (computed from the manifest when absent)");
    region->add_option("--statistic", target.statistic, "Reference nearness statistic: mean or median");
    add_occlusion_flags(region, occ);

    CompositeFlags comp;
    auto* compose = app.add_subcommand("composite", "Composite occluder clips over object clips to curate a dataset");
    add_common(compose, common, "--out,--out-dir", "Output directory (default composite)");
    compose->add_option("--scene", comp.scene, "Composite scene JSON")->required();
    compose->add_option("--alpha-cut", comp.alpha_cut, "Alpha above which an amodal pixel counts as hidden (default 0.5)");
    compose->add_option("--alpha-min", comp.alpha_min, "Alpha below which the occluder colour is not recovered");
    compose->add_flag("--verbatim-eq", comp.verbatim_eq, "Recover the occluder colour against the object scene, not the clean plate");

    TrainprepFlags tp;
    auto* trainprep = app.add_subcommand("trainprep", "Prepare fine-tuning samples and finetune_manifest.json");
    add_common(trainprep, common, "--out,--out-dir", "Output directory (default trainprep)");
    trainprep->add_option("--manifest", tp.manifest, "Sequence manifest with images and visible masks")->required();
    trainprep->add_option("--verdicts", tp.verdicts, "Verdicts JSON (computed from the manifest when absent)");
    trainprep->add_option("--token", tp.token, "Rare token substituted into the prompt (default sks)");
    add_occlusion_flags(trainprep, occ);

    EvalFlags ev;
    auto* eval = app.add_subcommand("eval", "Score predicted amodal masks against ground truth");
    add_common(eval, common, "--out", "Report JSON (default report.json)");
    eval->add_option("--pred-manifest", ev.pred, "Manifest with amodal_mask entries (repeatable)")->required();
    eval->add_option("--gt-manifest", ev.gt, "Manifest with gt_amodal / gt_visible entries (repeatable)")->required();
    eval->add_option("--name", ev.names, "Sequence name per prediction (repeatable)");

    std::vector<std::string> stats_gt;
    auto* stats = app.add_subcommand("stats", "Count occluded / heavily occluded / fully occluded frames");
    add_common(stats, common, "--out", "Statistics JSON (default stats.json)");
    stats->add_option("--gt-manifest", stats_gt, "Manifest with gt_amodal / gt_visible entries (repeatable)")->required();

    PipelineFlags pf;
    auto* pipeline = app.add_subcommand("pipeline", "End-to-end amodal segmentation");
    pipeline->require_subcommand(1);
    auto* run = pipeline->add_subcommand("run", "Run the full pipeline against segmenter / depth / outpainter backends");
    add_common(run, common, "--out,--workdir", "Artifacts directory (default tabe_run)");
    run->add_option("--manifest", pf.manifest, "Sequence manifest with input frames")->required();
    run->add_option("--query", pf.query, "Query mask for frame 0")->required();
    run->add_option("--backends", pf.backends, "backends.json endpoint descriptors");
    run->add_option("--mock", pf.mock_scene, "Use in-process mock backends driven by this mock_scene.json");
    run->add_option("--mock-mode", pf.mock_mode, "Mock behaviour: oracle, echo or noisy");
    run->add_option("--mock-rho", pf.mock_rho, "Pixel flip probability in noisy mock mode");
    run->add_option("--chunk-len", pf.chunk_len, "Target chunk length in frames (default 16)");
    run->add_option("--max-chunk-len", pf.max_chunk_len, "Maximum chunk length in frames (default 64)");
    run->add_option("--bbox-expand", pf.bbox_expand, "Uniform box expansion in percent");
    run->add_option("--token", pf.token, "Rare token substituted into the prompt (default sks)");
    run->add_flag("--concurrent", pf.concurrent, "Dispatch outpainting chunks concurrently");
    add_occlusion_flags(run, occ);

    RenderFlags rf;
    auto* render = app.add_subcommand("render", "Overlay masks on frames (green amodal GT, red visible GT, magenta prediction)");
    add_common(render, common, "--out,--out-dir", "Output directory (default renders)");
    render->add_option("--manifest", rf.manifest, "Manifest with images and optional ground truth")->required();
    render->add_option("--pred-manifest", rf.pred, "Manifest with predicted amodal masks");
    render->add_option("--opacity", rf.opacity, "Layer opacity in [0,1] (default 0.5)");

    SynthFlags sf;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic occlusion sequence with ground truth");
    add_common(synth, common, "--out,--out-dir", "Output directory (default synthetic)");
    synth->add_option("--frames", sf.frames, "Frame count (default 30)");
    synth->add_option("--width", sf.width, "Frame width (default 64)");
    synth->add_option("--height", sf.height, "Frame height (default 48)");

    MockFlags mf;
    auto* mock = app.add_subcommand("mock-backend", "Serve deterministic mock backends over stdin/stdout or HTTP");
    add_common(mock, common, "--out", "Unused; accepted for uniformity");
    mock->add_option("--scene", mf.scene, "mock_scene.json written by `tabe synth`")->required();
    mock->add_option("--mode", mf.mode, "oracle, echo or noisy");
    mock->add_option("--rho", mf.rho, "Pixel flip probability in noisy mode");
    mock->add_option("--listen", mf.listen, "Serve HTTP on host:port instead of stdin/stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*occlusion) return run_occlusion(common, occ);
        if (*bbox) return run_bbox(common, box, occ);
        if (*region) return run_target_region(common, target, occ);
        if (*compose) return run_composite(common, comp);
        if (*trainprep) return run_trainprep(common, tp, occ);
        if (*eval) return run_eval(common, ev);
        if (*stats) return run_stats(common, stats_gt);
        if (*run) return run_pipeline_cmd(common, pf, occ);
        if (*render) return run_render(common, rf);
        if (*synth) return run_synth(common, sf);
        if (*mock) return run_mock_backend(common, mf);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kBackend;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
    return kInternal;
}
