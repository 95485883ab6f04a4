#pragma once

#include "tabe/bbox.hpp"
#include "tabe/chunks.hpp"
#include "tabe/compositor.hpp"
#include "tabe/io.hpp"
#include "tabe/occlusion.hpp"
#include "tabe/target_region.hpp"
#include "tabe/trainprep.hpp"

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

namespace tabe {

/// Every tunable of every module, plus the subcommand's inputs. Written beside each run's outputs
/// as `effective_config.json` so a run can be replayed exactly.
struct RunConfig {
    std::string subcommand;
    std::map<std::string, std::string> inputs;
    std::string output;
    std::uint64_t seed = 0;

    OcclusionConfig occlusion;
    BoxConfig bbox;
    ReferenceStatistic target_statistic = ReferenceStatistic::Mean;
    MaskGenConfig mask_generation;
    FinetuneHyperparameters finetune;
    std::string token = "sks";
    ChunkConfig chunks;
    CompositorConfig compositor;
    double alpha_cut = 0.5;

    void validate() const {
        occlusion.validate();
        bbox.validate();
        mask_generation.validate();
        chunks.validate();
        if (token.empty()) throw ConfigError("token must not be empty");
        if (!(alpha_cut >= 0.0 && alpha_cut < 1.0)) throw ConfigError("alpha cut must lie in [0,1)");
    }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = {{"schema", "tabe-run-config/1"},
         {"subcommand", c.subcommand},
         {"inputs", c.inputs},
         {"seed", c.seed},
         {"occlusion",
          {{"t", c.occlusion.derivative_threshold},
           {"tau", c.occlusion.occlusion_fraction_threshold},
           {"probe_distance", c.occlusion.probe_distance},
           {"connectivity", static_cast<int>(c.occlusion.boundary_connectivity)},
           {"normalize_nearness", c.occlusion.normalize_nearness}}},
         {"bbox",
          {{"area_drop_fraction", c.bbox.area_drop_fraction},
           {"window", c.bbox.window},
           {"expansion_percent", c.bbox.expansion_percent}}},
         {"target_region", {{"statistic", c.target_statistic == ReferenceStatistic::Mean ? "mean" : "median"}}},
         {"mask_generation", c.mask_generation},
         {"finetune", c.finetune},
         {"token", c.token},
         {"chunks",
          {{"target_length", c.chunks.target_length},
           {"max_length", c.chunks.max_length},
           {"concurrent", c.chunks.concurrent}}},
         {"compositor",
          {{"alpha_min", c.compositor.alpha_min},
           {"verbatim_equation", c.compositor.verbatim_equation},
           {"alpha_cut", c.alpha_cut}}}};
}

/// Reads a (possibly partial) config; absent keys keep their defaults.
inline void from_json(const nlohmann::json& j, RunConfig& c) {
    try {
        c.subcommand = j.value("subcommand", c.subcommand);
        if (j.contains("inputs")) c.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        c.output = j.value("output", c.output);
        c.seed = j.value("seed", c.seed);
        if (j.contains("occlusion")) {
            const auto& o = j.at("occlusion");
            c.occlusion.derivative_threshold = o.value("t", c.occlusion.derivative_threshold);
            c.occlusion.occlusion_fraction_threshold = o.value("tau", c.occlusion.occlusion_fraction_threshold);
            c.occlusion.probe_distance = o.value("probe_distance", c.occlusion.probe_distance);
            const int conn = o.value("connectivity", static_cast<int>(c.occlusion.boundary_connectivity));
            if (conn != 4 && conn != 8) throw ConfigError("connectivity must be 4 or 8");
            c.occlusion.boundary_connectivity = conn == 4 ? Connectivity::Four : Connectivity::Eight;
            c.occlusion.normalize_nearness = o.value("normalize_nearness", c.occlusion.normalize_nearness);
        }
        if (j.contains("bbox")) {
            const auto& b = j.at("bbox");
            c.bbox.area_drop_fraction = b.value("area_drop_fraction", c.bbox.area_drop_fraction);
            c.bbox.window = b.value("window", c.bbox.window);
            c.bbox.expansion_percent = b.value("expansion_percent", c.bbox.expansion_percent);
        }
        if (j.contains("target_region")) {
            const auto stat = j.at("target_region").value("statistic", std::string("mean"));
            if (stat != "mean" && stat != "median") throw ConfigError("target statistic must be mean or median");
            c.target_statistic = stat == "mean" ? ReferenceStatistic::Mean : ReferenceStatistic::Median;
        }
        if (j.contains("mask_generation")) c.mask_generation = j.at("mask_generation").get<MaskGenConfig>();
        if (j.contains("finetune")) c.finetune = j.at("finetune").get<FinetuneHyperparameters>();
        c.token = j.value("token", c.token);
        if (j.contains("chunks")) {
            const auto& k = j.at("chunks");
            c.chunks.target_length = k.value("target_length", c.chunks.target_length);
            c.chunks.max_length = k.value("max_length", c.chunks.max_length);
            c.chunks.concurrent = k.value("concurrent", c.chunks.concurrent);
        }
        if (j.contains("compositor")) {
            const auto& k = j.at("compositor");
            c.compositor.alpha_min = k.value("alpha_min", c.compositor.alpha_min);
            c.compositor.verbatim_equation = k.value("verbatim_equation", c.compositor.verbatim_equation);
            c.alpha_cut = k.value("alpha_cut", c.alpha_cut);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
}

inline RunConfig load_run_config(const fs::path& path) { return read_json(path).get<RunConfig>(); }

} // namespace tabe
