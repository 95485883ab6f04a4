#include <gtest/gtest.h>

#include "tabe/metrics.hpp"
#include "test_util.hpp"

#include <random>
#include <set>

using namespace tabe;

namespace {

using PixelSet = std::set<std::pair<int, int>>;

PixelSet to_set(const Mask& m) {
    PixelSet s;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m(x, y)) s.insert({x, y});
    return s;
}

std::optional<double> set_iou(const PixelSet& a, const PixelSet& b) {
    PixelSet inter, uni = a;
    for (const auto& p : b) {
        if (a.count(p)) inter.insert(p);
        uni.insert(p);
    }
    if (uni.empty()) return std::nullopt;
    return double(inter.size()) / double(uni.size());
}

PixelSet set_minus(const PixelSet& a, const PixelSet& b) {
    PixelSet out;
    for (const auto& p : a)
        if (!b.count(p)) out.insert(p);
    return out;
}

} // namespace

TEST(Iou, MatchesSetOracleOnRandomPairs) {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const double p = (trial % 10) / 10.0;
        const Mask a = testutil::random_mask(rng, 8, 8, p), b = testutil::random_mask(rng, 8, 8, 1 - p);
        const auto got = iou(a, b);
        const auto want = set_iou(to_set(a), to_set(b));
        ASSERT_EQ(got.has_value(), want.has_value());
        if (got) { EXPECT_DOUBLE_EQ(*got, *want); }
    }
}

TEST(Iou, HandExamples) {
    const Mask a = testutil::rect_mask(4, 4, 0, 0, 2, 4); // 8 pixels
    const Mask b = testutil::rect_mask(4, 4, 1, 0, 3, 4); // 8 pixels, 4 shared
    EXPECT_DOUBLE_EQ(*iou(a, b), 4.0 / 12.0);
    EXPECT_DOUBLE_EQ(*iou(a, a), 1.0);
    EXPECT_DOUBLE_EQ(*iou(a, Mask(4, 4)), 0.0);
    EXPECT_FALSE(iou(Mask(4, 4), Mask(4, 4)));
    EXPECT_THROW(iou(Mask(4, 4), Mask(4, 5)), ValidationError);
}

TEST(NonVisibleIou, MatchesSetOracle) {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const Mask amodal = testutil::random_mask(rng, 8, 8, 0.6);
        const Mask visible = amodal & testutil::random_mask(rng, 8, 8, 0.5);
        const Mask pred = testutil::random_mask(rng, 8, 8, 0.5);
        const auto vis = to_set(visible);
        const auto hidden = set_minus(to_set(amodal), vis);
        const auto got = non_visible_pixel_iou(pred, amodal, visible);
        if (hidden.empty()) {
            EXPECT_FALSE(got);
            continue;
        }
        ASSERT_TRUE(got);
        EXPECT_DOUBLE_EQ(*got, *set_iou(set_minus(to_set(pred), vis), hidden));
    }
}

TEST(NonVisibleIou, EchoingTheVisibleMaskScoresZero) {
    const Mask amodal = testutil::rect_mask(10, 10, 2, 2, 8, 8);
    const Mask visible = testutil::rect_mask(10, 10, 2, 2, 5, 8);
    EXPECT_DOUBLE_EQ(*non_visible_pixel_iou(visible, amodal, visible), 0.0);
    EXPECT_DOUBLE_EQ(*non_visible_pixel_iou(amodal, amodal, visible), 1.0);
    EXPECT_FALSE(non_visible_pixel_iou(amodal, amodal, amodal));
    EXPECT_THROW(non_visible_pixel_iou(amodal, visible, amodal), ValidationError);
}

TEST(EvaluateFrame, Categories) {
    const Mask amodal = testutil::rect_mask(10, 10, 0, 0, 10, 2); // 20 pixels
    auto f = evaluate_frame(0, amodal, amodal, amodal);
    EXPECT_FALSE(f.occluded);
    EXPECT_DOUBLE_EQ(*f.occlusion_fraction, 0.0);

    f = evaluate_frame(0, amodal, amodal, testutil::rect_mask(10, 10, 0, 0, 5, 2)); // exactly half hidden
    EXPECT_TRUE(f.occluded);
    EXPECT_FALSE(f.heavily_occluded);
    f = evaluate_frame(0, amodal, amodal, testutil::rect_mask(10, 10, 0, 0, 9, 1)); // 11 of 20 hidden
    EXPECT_TRUE(f.heavily_occluded);
    EXPECT_FALSE(f.fully_occluded);

    f = evaluate_frame(0, amodal, amodal, Mask(10, 10));
    EXPECT_TRUE(f.fully_occluded && f.heavily_occluded && f.occluded);
    EXPECT_DOUBLE_EQ(*f.non_visible_iou, 1.0);

    f = evaluate_frame(0, amodal, Mask(10, 10), Mask(10, 10));
    EXPECT_FALSE(f.iou);
    EXPECT_FALSE(f.occlusion_fraction);
}

TEST(EvaluateSequence, AveragesOnlyOverEligibleFrames) {
    const int w = 10, h = 10;
    const Mask amodal = testutil::rect_mask(w, h, 0, 0, 10, 2);
    const Mask half = testutil::rect_mask(w, h, 0, 0, 5, 2);
    // frame 0 unoccluded perfect, frame 1 half hidden and predicted as visible only,
    // frame 2 fully hidden and predicted perfectly, frame 3 has no object.
    MaskSequence gt_a{amodal, amodal, amodal, Mask(w, h)};
    MaskSequence gt_v{amodal, half, Mask(w, h), Mask(w, h)};
    MaskSequence pred{amodal, half, amodal, Mask(w, h)};
    const auto r = evaluate_sequence(pred, gt_a, gt_v, "s");
    EXPECT_EQ(r.counts.frames, 3);
    EXPECT_EQ(r.counts.occluded, 2);
    EXPECT_EQ(r.counts.fully_occluded, 1);
    EXPECT_DOUBLE_EQ(*r.mean_iou, (1.0 + 0.5 + 1.0) / 3);
    EXPECT_DOUBLE_EQ(*r.occlusion_iou, (0.5 + 1.0) / 2);
    EXPECT_DOUBLE_EQ(*r.full_occlusion_iou, 1.0);
    EXPECT_DOUBLE_EQ(*r.non_visible_pixel_iou, (0.0 + 1.0) / 2);
    EXPECT_FALSE(r.frames[3].iou);

    const auto none = evaluate_sequence({amodal}, {amodal}, {amodal});
    EXPECT_FALSE(none.occlusion_iou);
    EXPECT_FALSE(none.full_occlusion_iou);
    EXPECT_FALSE(none.non_visible_pixel_iou);
    EXPECT_THROW(evaluate_sequence({amodal}, {amodal, amodal}, {amodal}), ValidationError);
}

TEST(Aggregate, PerSequenceAndPooledDiffer) {
    const int w = 10, h = 10;
    const Mask amodal = testutil::rect_mask(w, h, 0, 0, 10, 2);
    const Mask half = testutil::rect_mask(w, h, 0, 0, 5, 2);
    // Sequence A: one occluded frame at IoU 0.5. Sequence B: three occluded frames at IoU 1.
    const auto a = evaluate_sequence({half}, {amodal}, {half}, "a");
    const auto b = evaluate_sequence({amodal, amodal, amodal}, {amodal, amodal, amodal}, {half, half, half}, "b");
    const auto d = aggregate({a, b});
    EXPECT_DOUBLE_EQ(*d.per_sequence_mean.occlusion_iou, 0.75);
    EXPECT_DOUBLE_EQ(*d.pooled_frames.occlusion_iou, (0.5 + 3.0) / 4);
    EXPECT_EQ(d.pooled_frames.counts.occluded, 4);
    EXPECT_FALSE(d.pooled_frames.full_occlusion_iou);
    EXPECT_EQ(d.sequences.size(), 2u);
}

TEST(OcclusionStatistics, CountsFromGroundTruth) {
    const int w = 10, h = 10;
    const Mask amodal = testutil::rect_mask(w, h, 0, 0, 10, 2);
    const auto c = occlusion_statistics({amodal, amodal, amodal, Mask(w, h)},
                                        {amodal, testutil::rect_mask(w, h, 0, 0, 2, 2), Mask(w, h), Mask(w, h)});
    EXPECT_EQ(c.frames, 3);
    EXPECT_EQ(c.occluded, 2);
    EXPECT_EQ(c.heavily_occluded, 2);
    EXPECT_EQ(c.fully_occluded, 1);
}

TEST(EvalReport, JsonUsesNullForAbsentValues) {
    const Mask amodal = testutil::rect_mask(4, 4, 0, 0, 4, 4);
    const auto r = evaluate_sequence({amodal}, {amodal}, {amodal}, "x");
    const nlohmann::json j = r;
    EXPECT_TRUE(j.at("occlusion_iou").is_null());
    EXPECT_DOUBLE_EQ(j.at("mean_iou").get<double>(), 1.0);
    const auto back = j.get<EvalReport>();
    EXPECT_EQ(back.name, "x");
    EXPECT_FALSE(back.occlusion_iou);
    EXPECT_EQ(back.counts.frames, 1);
}
