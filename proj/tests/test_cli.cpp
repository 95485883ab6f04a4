#include <gtest/gtest.h>

#include "tabe/compositor.hpp"
#include "tabe/io.hpp"
#include "test_util.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

using namespace tabe;

namespace {

const std::string kCli = TABE_CLI_PATH;

int tabe_cli(const std::string& args, const fs::path& log = "/dev/null") {
    return testutil::run(kCli + " " + args + " > '" + log.string() + "' 2>&1");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::set<std::string> flags_in(const std::string& text) {
    std::set<std::string> out;
    static const std::regex flag(R"(--[a-z][a-z0-9-]*)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), flag); it != std::sregex_iterator(); ++it) {
        const auto f = it->str();
        if (f != "--help" && f != "--version") out.insert(f);
    }
    return out;
}

/// The README section for one subcommand: from its heading to the next heading.
std::string readme_section(const std::string& readme, const std::string& command) {
    const std::string heading = "### `tabe " + command + "`";
    const auto at = readme.find(heading);
    if (at == std::string::npos) return {};
    const auto end = readme.find("\n#", at + heading.size());
    return readme.substr(at + heading.size(), end == std::string::npos ? std::string::npos : end - at - heading.size());
}

struct Synth {
    testutil::TempDir dir;
    Synth(int frames = 16) { EXPECT_EQ(tabe_cli("synth --frames " + std::to_string(frames) + " --seed 2 --out " + (dir / "s").string()), 0); }
    std::string manifest() const { return (dir / "s/manifest.json").string(); }
};

} // namespace

TEST(Cli, HelpListsEveryDocumentedFlag) {
    const std::string readme = slurp(fs::path(TABE_SOURCE_DIR) / "README.md");
    ASSERT_FALSE(readme.empty());
    testutil::TempDir dir;
    for (const std::string cmd : {"occlusion", "bbox", "target-region", "composite", "trainprep", "eval", "stats",
                                  "pipeline run", "render", "synth", "mock-backend"}) {
        ASSERT_EQ(tabe_cli(cmd + " --help", dir / "help.txt"), 0) << cmd;
        const auto help = flags_in(slurp(dir / "help.txt"));
        const auto section = readme_section(readme, cmd);
        ASSERT_FALSE(section.empty()) << "README has no section for " << cmd;
        EXPECT_EQ(flags_in(section), help) << cmd;
    }
}

TEST(Cli, ExitCodes) {
    Synth s;
    testutil::TempDir dir;
    EXPECT_EQ(tabe_cli(""), 2);
    EXPECT_EQ(tabe_cli("--help"), 0);
    EXPECT_EQ(tabe_cli("occlusion"), 2);                      // missing required flag
    EXPECT_EQ(tabe_cli("occlusion --manifest /nonexistent.json --out " + (dir / "v.json").string()), 2);
    EXPECT_EQ(tabe_cli("occlusion --manifest " + s.manifest() + " --t -1 --out " + (dir / "v.json").string()), 2);

    // A manifest whose visible ground truth leaves the amodal mask.
    const auto m = SequenceManifest::load(s.manifest());
    save_mask(Mask(m.width, m.height, true), m.resolve(*m.frames[1].gt_visible));
    EXPECT_EQ(tabe_cli("stats --gt-manifest " + s.manifest() + " --out " + (dir / "st.json").string()), 4);

    // Backends that cannot be reached.
    write_json(dir / "backends.json", {{"segmenter", {{"kind", "subprocess"}, {"command", {"/nonexistent/seg"}}, {"timeout_ms", 2000}}},
                                       {"depth_estimator", {{"kind", "subprocess"}, {"command", {"true"}}}},
                                       {"outpainter", {{"kind", "http"}, {"address", "http://127.0.0.1:9"}, {"timeout_ms", 500}}}});
    EXPECT_EQ(tabe_cli("pipeline run --manifest " + s.manifest() + " --query " + (s.dir / "s/query.png").string() +
                       " --backends " + (dir / "backends.json").string() + " --out " + (dir / "run").string()),
              3);
    save_mask(Mask(m.width, m.height), dir / "empty.png");
    EXPECT_EQ(tabe_cli("pipeline run --manifest " + s.manifest() + " --query " + (dir / "empty.png").string() + " --mock " +
                       (s.dir / "s/mock_scene.json").string() + " --out " + (dir / "run2").string()),
              4);
}

TEST(Cli, EffectiveConfigReplaysTheRun) {
    Synth s;
    testutil::TempDir dir;
    ASSERT_EQ(tabe_cli("trainprep --manifest " + s.manifest() + " --seed 9 --token zwx --out " + (dir / "a").string()), 0);
    const auto cfg = read_json(dir / "a/effective_config.json");
    EXPECT_EQ(cfg.at("seed"), 9);
    EXPECT_EQ(cfg.at("token"), "zwx");
    EXPECT_EQ(cfg.at("subcommand"), "trainprep");
    ASSERT_EQ(tabe_cli("trainprep --manifest " + s.manifest() + " --config " + (dir / "a/effective_config.json").string() +
                       " --out " + (dir / "b").string()),
              0);
    EXPECT_EQ(slurp(dir / "a/finetune_manifest.json"), slurp(dir / "b/finetune_manifest.json"));
    EXPECT_EQ(slurp(dir / "a/effective_config.json"), slurp(dir / "b/effective_config.json"));

    ASSERT_EQ(tabe_cli("occlusion --manifest " + s.manifest() + " --tau 0.3 --out " + (dir / "v.json").string()), 0);
    EXPECT_DOUBLE_EQ(read_json(dir / "v.effective_config.json").at("occlusion").at("tau").get<double>(), 0.3);
}

TEST(Cli, SubcommandsChain) {
    Synth s(12);
    testutil::TempDir dir;
    const std::string d = dir.path().string();
    ASSERT_EQ(tabe_cli("occlusion --manifest " + s.manifest() + " --out " + d + "/v.json"), 0);
    ASSERT_EQ(tabe_cli("bbox --manifest " + s.manifest() + " --verdicts " + d + "/v.json --out " + d + "/b.json"), 0);
    ASSERT_EQ(tabe_cli("target-region --manifest " + s.manifest() + " --boxes " + d + "/b.json --out " + d + "/t"), 0);
    EXPECT_TRUE(fs::exists(dir / "t/0011.png"));
    ASSERT_EQ(tabe_cli("pipeline run --manifest " + s.manifest() + " --query " + (s.dir / "s/query.png").string() + " --mock " +
                       (s.dir / "s/mock_scene.json").string() + " --out " + d + "/run"),
              0);
    ASSERT_EQ(tabe_cli("eval --pred-manifest " + d + "/run/output_manifest.json --gt-manifest " + s.manifest() +
                           " --name synth --out " + d + "/report.json",
                       dir / "eval.txt"),
              0);
    const auto report = read_json(dir / "report.json");
    EXPECT_DOUBLE_EQ(report.at("table").at("sequences").at("synth").at("Non Visible Pixel IoU").get<double>(), 1.0);
    EXPECT_NE(slurp(dir / "eval.txt").find("| synth | 1.000 | 1.000 | 1.000 |"), std::string::npos);
    ASSERT_EQ(tabe_cli("render --manifest " + s.manifest() + " --pred-manifest " + d + "/run/output_manifest.json --out " + d + "/r"), 0);
    EXPECT_TRUE(fs::exists(dir / "r/0000.png"));
}

TEST(Cli, CompositeBuildsAManifestWithDerivedVisibility) {
    testutil::TempDir dir;
    const int w = 8, h = 6;
    save_image(FrameImage(w, h, Color{0.2, 0.2, 0.2}), dir / "cp.png");
    json bg = json::array(), amodal = json::array(), fg = json::array(), alpha = json::array();
    for (int i = 0; i < 3; ++i) {
        const std::string stem = frame_stem(i) + ".png";
        save_image(FrameImage(w, h, Color{0.4, 0.4, 0.4}), dir / "bg" / stem);
        save_mask(testutil::rect_mask(w, h, 1, 1, 5, 5), dir / "amodal" / stem);
        save_image(FrameImage(w, h, Color{0.6, 0.6, 0.6}), dir / "fg" / stem);
        AlphaMatte a(w, h, 0.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < 3; ++x) a(x, y) = 1.0;
        save_alpha(a, dir / "alpha" / stem);
        bg.push_back("bg/" + stem);
        amodal.push_back("amodal/" + stem);
        fg.push_back("fg/" + stem);
        alpha.push_back("alpha/" + stem);
    }
    write_json(dir / "scene.json", {{"clean_plate", "cp.png"}, {"background", bg}, {"gt_amodal", amodal}, {"foreground", fg},
                                    {"alpha", alpha}, {"offsets", {{"foreground", 1}}}});
    ASSERT_EQ(tabe_cli("composite --scene " + (dir / "scene.json").string() + " --out " + (dir / "out").string()), 0);
    const auto m = SequenceManifest::load(dir / "out/manifest.json");
    ASSERT_EQ(m.frames.size(), 2u); // the foreground offset leaves two frames
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(m.load_gt_visible()[0], testutil::rect_mask(w, h, 3, 1, 5, 5));
    const auto img = m.load_images()[1];
    EXPECT_DOUBLE_EQ(img(0, 0, 0), 0.6);
    EXPECT_DOUBLE_EQ(img(7, 0, 0), 0.4);
    EXPECT_TRUE(fs::exists(dir / "out/effective_config.json"));

    write_json(dir / "bad.json", {{"clean_plate", "cp.png"}, {"background", bg}, {"gt_amodal", json::array()}, {"foreground", fg}, {"alpha", alpha}});
    EXPECT_EQ(tabe_cli("composite --scene " + (dir / "bad.json").string() + " --out " + (dir / "bad").string()), 2);
}
