#include <gtest/gtest.h>

#include "tabe/report.hpp"
#include "test_util.hpp"

#include <regex>

using namespace tabe;

TEST(Overlay, BlendsLayersInOrder) {
    const FrameImage frame(4, 4, Color{0.2, 0.4, 0.6});
    const Mask amodal = testutil::rect_mask(4, 4, 0, 0, 2, 4);
    const Mask pred = testutil::rect_mask(4, 4, 1, 0, 4, 4);
    const auto out = render_overlay(frame, {{amodal, kAmodalColor, 0.5}, {pred, kPredictionColor, 1.0}});
    EXPECT_DOUBLE_EQ(out(0, 0, 0), 0.1);
    EXPECT_DOUBLE_EQ(out(0, 0, 1), 0.7);
    EXPECT_DOUBLE_EQ(out(0, 0, 2), 0.3);
    for (int c = 0; c < 3; ++c) {
        EXPECT_DOUBLE_EQ(out(1, 1, c), c == 1 ? 0.0 : 1.0); // opaque prediction wins
        EXPECT_DOUBLE_EQ(out(3, 3, c), c == 1 ? 0.0 : 1.0);
    }
    EXPECT_EQ(render_overlay(frame, {{Mask(4, 4), kVisibleColor, 0.5}}).values(), frame.values());
    EXPECT_THROW(render_overlay(frame, {{amodal, kVisibleColor, 1.5}}), ConfigError);
}

TEST(ResultsTable, ColumnsAndAbsentValues) {
    const Mask amodal = testutil::rect_mask(10, 10, 0, 0, 10, 2);
    const Mask half = testutil::rect_mask(10, 10, 0, 0, 5, 2);
    const auto a = evaluate_sequence({half}, {amodal}, {half}, "alpha");
    const auto b = evaluate_sequence({amodal}, {amodal}, {amodal}, "beta");
    const auto d = aggregate({a, b});
    const std::string text = format_results_table(d);
    EXPECT_NE(text.find("| Sequence | Occlusion IoU | Full Occlusion IoU | Non Visible Pixel IoU |"), std::string::npos);
    EXPECT_NE(text.find("| alpha | 0.500 | — | 0.000 |"), std::string::npos) << text;
    EXPECT_NE(text.find("| beta | — | — | — |"), std::string::npos) << text;
    EXPECT_NE(text.find("mean (per sequence)"), std::string::npos);
    EXPECT_NE(text.find("mean (pooled frames)"), std::string::npos);

    const auto j = results_table_json(d);
    EXPECT_EQ(j.at("columns"), nlohmann::json(result_columns()));
    EXPECT_TRUE(j.at("sequences").at("beta").at("Occlusion IoU").is_null());
    EXPECT_DOUBLE_EQ(j.at("sequences").at("alpha").at("Occlusion IoU").get<double>(), 0.5);
}

TEST(ResultsTable, TextAndJsonAgree) {
    // Every printed number is the JSON value rounded to three places.
    const Mask amodal = testutil::rect_mask(9, 9, 0, 0, 9, 3);
    const Mask vis = testutil::rect_mask(9, 9, 0, 0, 2, 3);
    const Mask pred = testutil::rect_mask(9, 9, 0, 0, 7, 3);
    const auto d = aggregate({evaluate_sequence({pred, amodal}, {amodal, amodal}, {vis, Mask(9, 9)}, "s")});
    const auto j = results_table_json(d);
    const std::string text = format_results_table(d);
    std::smatch m;
    ASSERT_TRUE(std::regex_search(text, m, std::regex(R"(\| s \| ([0-9.]+) \| ([0-9.]+) \| ([0-9.]+) \|)")));
    const auto& row = j.at("sequences").at("s");
    for (std::size_t k = 0; k < 3; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", row.at(result_columns()[k]).get<double>());
        EXPECT_EQ(m[k + 1].str(), buf);
    }
}

TEST(StatisticsTable, CountsAndColumns) {
    const Mask amodal = testutil::rect_mask(10, 10, 0, 0, 10, 2);
    const Mask sliver = testutil::rect_mask(10, 10, 0, 0, 2, 2);
    const auto s = dataset_statistics({{{amodal, amodal}, {amodal, sliver}}, {{amodal}, {Mask(10, 10)}}});
    EXPECT_EQ(s.scenes, 2);
    EXPECT_EQ(s.images, 3);
    const std::string text = format_statistics_table(s);
    EXPECT_NE(text.find("| Scenes | Images | Occluded Frames | Heavily Occluded Frames | Fully Occluded Frames |"), std::string::npos);
    EXPECT_NE(text.find("| 2 | 3 | 2 | 2 | 1 |"), std::string::npos) << text;
    const auto j = statistics_json(s);
    for (const auto& c : statistics_columns()) EXPECT_TRUE(j.contains(c)) << c;
}
