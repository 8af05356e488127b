#include <cmath>

#include <gtest/gtest.h>

#include "grasp/io.hpp"
#include "grasp/synth.hpp"
#include "test_support.hpp"

using namespace grasp;
using namespace grasp::synth;
namespace fs = std::filesystem;

TEST(Synth, SameSeedGivesByteIdenticalCatalogs) {
    const auto cfg = config_from_json(test::pumice_config_json());
    const auto a = test::fresh_dir("synth_det_a");
    const auto b = test::fresh_dir("synth_det_b");
    generate(cfg, a);
    generate(cfg, b);
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(read_file_bytes(entry.path()), read_file_bytes(b / rel)) << rel;
        ++files;
    }
    EXPECT_EQ(files, 5u + 4u); // scenes, land mask, manifest, truth, pumice calibration

    auto other = test::pumice_config_json();
    other["seed"] = 1;
    const auto c = generate_scenes(config_from_json(other));
    const auto d = generate_scenes(cfg);
    EXPECT_FALSE(bit_equal(c.scenes[0].raster, d.scenes[0].raster));
}

TEST(Synth, ZeroNoiseIsExactBackground) {
    const auto out = generate_scenes(config_from_json(test::change_config_json(3, 0.0)));
    const auto events = out.truth.event_mask(EventKind::Construct, 512, 512);
    const auto losses = out.truth.event_mask(EventKind::Destruct, 512, 512);
    for (const auto& s : out.scenes) {
        const FloatPlane& vv = s.raster.band("vv");
        const bool on = s.timestamp >= parse_timestamp(test::kChangeOnset);
        for (std::size_t i = 0; i < vv.size(); ++i) {
            const float expected = !on ? -12.0f : events.data[i] ? -6.0f : losses.data[i] ? -18.0f : -12.0f;
            ASSERT_EQ(vv.data[i], expected);
        }
    }
}

TEST(Synth, EventShiftsMeanByMagnitude) {
    const double sigma = 1.0;
    const auto out = generate_scenes(config_from_json(test::change_config_json(77, sigma)));
    const Mask m = out.truth.event_mask(EventKind::Construct, 512, 512);
    const std::size_t n = count_set(m);
    ASSERT_EQ(n, 100u * 100u);
    for (const auto& s : out.scenes) {
        if (s.timestamp < parse_timestamp(test::kChangeOnset)) continue;
        double sum = 0;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m.data[i]) sum += s.raster.band("vv").data[i];
        EXPECT_NEAR(sum / n, -12.0 + 6.0, 3.0 * sigma / std::sqrt(static_cast<double>(n))) << s.id;
    }
}

TEST(Synth, CloudFractionWithinTwoPoints) {
    for (double f : {0.05, 0.15, 0.4}) {
        const auto out = generate_scenes(config_from_json(test::pumice_config_json(9, f)));
        for (const auto& s : out.scenes) {
            std::size_t cloudy = 0;
            for (float c : s.raster.band("cloud").data) cloudy += c >= 0.5f;
            const double actual = static_cast<double>(cloudy) / (256.0 * 256.0);
            EXPECT_NEAR(actual, f, 0.02) << s.id;
        }
    }
}

TEST(Synth, TruthRecordsCloudsLandAndCalibration) {
    const auto out = generate_scenes(config_from_json(test::pumice_config_json()));
    EXPECT_EQ(count_set(out.truth.land), 60u * 256u);
    ASSERT_EQ(out.truth.scenes.size(), 5u);
    for (std::size_t k = 0; k < out.scenes.size(); ++k) {
        const FloatPlane& c = out.scenes[k].raster.band("cloud");
        for (std::size_t i = 0; i < c.size(); ++i) ASSERT_EQ(c.data[i] >= 0.5f, out.truth.scenes[k].cloud.data[i] != 0);
    }
    ASSERT_TRUE(out.truth.pumice_calibration.has_value());
    EXPECT_EQ(out.truth.pumice_calibration->pumice.size(), 100u);
    EXPECT_FALSE(out.truth.change_calibration.has_value());
    ASSERT_TRUE(out.land.has_value());
}

TEST(SynthConfig, InvalidFieldIsNamed) {
    auto expect_field = [](nlohmann::json j, const std::string& field) {
        try {
            config_from_json(j);
            FAIL() << field;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
            EXPECT_EQ(e.detail(), field);
        }
    };
    auto j = test::change_config_json();
    j["grid"]["width"] = -5;
    expect_field(j, "grid.width");
    j = test::change_config_json();
    j.erase("seed");
    expect_field(j, "seed");
    j = test::change_config_json();
    j["events"][1]["rect"] = {300, 320, 600, 400};
    expect_field(j, "events[1].rect");
    j = test::change_config_json();
    j["events"][0]["kind"] = "flood";
    expect_field(j, "events[0].kind");
    j = test::pumice_config_json();
    j["optical"]["cloud_fraction"] = 1.5;
    expect_field(j, "optical.cloud_fraction");
    j = test::change_config_json();
    j["sar"]["start"] = "January";
    expect_field(j, "sar.start");
}

TEST(ScoreMasks, ReferenceCases) {
    Mask a(4, 4, 0), b(4, 4, 0);
    for (std::size_t i = 0; i < 8; ++i) a.data[i] = 1;
    EXPECT_EQ(score_masks(a, a).iou, 1.0);
    for (std::size_t i = 8; i < 16; ++i) b.data[i] = 1;
    EXPECT_EQ(score_masks(a, b).iou, 0.0);
    Mask half(4, 4, 0);
    for (std::size_t i = 4; i < 12; ++i) half.data[i] = 1;
    const MaskScore s = score_masks(half, a);
    EXPECT_DOUBLE_EQ(s.iou, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.precision, 0.5);
    EXPECT_DOUBLE_EQ(s.recall, 0.5);
    EXPECT_THROW(score_masks(a, Mask(3, 3, 0)), Error);
}

TEST(Synth, CalibrationRoundTripsThroughJson) {
    const auto out = generate_scenes(config_from_json(test::change_config_json()));
    ASSERT_TRUE(out.truth.change_calibration.has_value());
    const CalibrationSet& c = *out.truth.change_calibration;
    const CalibrationSet back = calibration_from_json(to_json(c));
    ASSERT_EQ(back.constructed.size(), c.constructed.size());
    for (std::size_t i = 0; i < c.constructed.size(); ++i) {
        EXPECT_EQ(back.constructed[i].lon, c.constructed[i].lon);
        EXPECT_EQ(back.constructed[i].lat, c.constructed[i].lat);
    }
    EXPECT_EQ(back.reference_date1, c.reference_date1);
    EXPECT_EQ(back.reference_date2, c.reference_date2);
}
