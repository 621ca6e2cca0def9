#include <fstream>

#include <gtest/gtest.h>

#include "accdiff/bridge.hpp"
#include "manifest_fixture.hpp"

using namespace accdiff;
using accdiff::testing::expect_error;
using accdiff::testing::TempDir;
using accdiff::testing::write_oracle_capture;

TEST(Manifest, LoadsAndResolvesPaths) {
    TempDir dir("manifest");
    const auto fx = write_oracle_capture(dir.path(), 5);
    const CaptureManifest m = load_manifest(fx.manifest);
    EXPECT_EQ(m.model, "oracle");
    EXPECT_EQ(m.tokens, (std::vector<std::string>{"cat", "dog"}));
    EXPECT_EQ(m.latent, (Shape3{4, 4, 2}));
    EXPECT_EQ(m.eps.size(), 5u);
    EXPECT_EQ(m.trajectory.front().timestep, 4);
    EXPECT_TRUE(m.initial_latent.is_absolute() || m.initial_latent.parent_path() == dir.path());
    EXPECT_TRUE(std::filesystem::exists(m.eps[2].file));
}

TEST(Manifest, MissingFileAndMalformedJson) {
    TempDir dir("manifest_bad");
    const auto fx = write_oracle_capture(dir.path(), 3);
    std::filesystem::remove(dir.path() / "eps_2.acct");
    expect_error(ErrorCode::Io, [&] { load_manifest(fx.manifest); });
    std::ofstream(dir.path() / "broken.json") << "{\"eps\": [";
    expect_error(ErrorCode::Format, [&] { load_manifest(dir.path() / "broken.json"); });
    std::ofstream(dir.path() / "no_file.json") << R"({"eps": [{"timestep": 1}]})";
    expect_error(ErrorCode::Format, [&] { load_manifest(dir.path() / "no_file.json"); });
    expect_error(ErrorCode::Io, [&] { load_manifest(dir.path() / "absent.json"); });
}

TEST(Replay, OracleCaptureReplaysWithinTolerance) {
    TempDir dir("replay");
    const auto fx = write_oracle_capture(dir.path(), 10);
    const ReplayReport report = replay_phase1(load_manifest(fx.manifest), 1e-3);
    EXPECT_EQ(report.steps, 10);
    EXPECT_FALSE(report.first_divergent_step.has_value());
    EXPECT_LE(report.max_error, 1e-3);
    ASSERT_EQ(report.trajectory.size(), 10u);
    EXPECT_LE(max_abs_diff(report.trajectory[0], fx.target), 1e-4);
}

TEST(Replay, CorruptedStepIsLocated) {
    TempDir dir("replay_bad");
    const auto fx = write_oracle_capture(dir.path(), 8, 3);
    const ReplayReport report = replay_phase1(load_manifest(fx.manifest), 1e-3);
    ASSERT_TRUE(report.first_divergent_step.has_value());
    EXPECT_EQ(*report.first_divergent_step, 3);
    EXPECT_GT(report.max_error, 1e-3);
}

TEST(Replay, EmptyManifestReplaysNothing) {
    TempDir dir("replay_empty");
    std::ofstream(dir.path() / "m.json") << R"({"tokens": []})";
    const CaptureManifest m = load_manifest(dir.path() / "m.json");
    EXPECT_TRUE(m.empty());
    const ReplayReport report = replay_phase1(m, 1e-3);
    EXPECT_EQ(report.steps, 0);
    EXPECT_FALSE(report.first_divergent_step.has_value());
}

TEST(RecordedSources, AttentionAndNoiseAreServedByTimestep) {
    TempDir dir("recorded");
    const auto fx = write_oracle_capture(dir.path(), 4);
    const CaptureManifest m = load_manifest(fx.manifest);
    const RecordedAttention attention(m);
    EXPECT_EQ(attention.tokens(), m.tokens);
    const auto records = attention.capture(2, Latent3());
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].map_h, 2u);
    EXPECT_FLOAT_EQ(records[0].at(3, 1), 0.8f);
    EXPECT_TRUE(attention.capture(9, Latent3()).empty());

    const RecordedPredictor predictor(m);
    const Latent3 z({4, 4, 2});
    EXPECT_EQ(predictor.predict(z, 4, {}), to_latent(read_tensor(dir.path() / "eps_4.acct")));
    expect_error(ErrorCode::Contract, [&] { predictor.predict(z, 7, {}); });
    expect_error(ErrorCode::ShapeMismatch, [&] { predictor.predict(Latent3({2, 2, 2}), 4, {}); });

    AttentionRecord wrong = m.attention[0];
    wrong.map_h = 3;
    expect_error(ErrorCode::ShapeMismatch, [&] { load_attention_record(wrong, m.tokens); });
}
