#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "accdiff/cli.hpp"
#include "accdiff/masks.hpp"
#include "accdiff/toy_model.hpp"
#include "manifest_fixture.hpp"

using namespace accdiff;
using accdiff::testing::random_latent;
using accdiff::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const char* kToyConfig = R"({
  "steps": 8, "latent_h": 8, "latent_w": 8, "channels": 2, "target_h": 16, "target_w": 16,
  "window_h": 8, "window_w": 8, "stride_h": 8, "stride_w": 8, "seed": 3,
  "scene": {"blobs": [
    {"token": "cat", "center": [0.25, 0.25], "radius": 0.15, "amplitude": 1.0},
    {"token": "dog", "center": [0.75, 0.75], "radius": 0.15, "amplitude": 1.0}]}
})";

fs::path write_text(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

struct Captured {
    int code;
    std::string out, err;
};

template <typename Fn>
Captured capture(Fn&& fn) {
    std::ostringstream out, err;
    const int code = fn(out, err);
    return {code, out.str(), err.str()};
}

Captured run_cli(const fs::path& config, const fs::path& out_dir, cli::Ablation ablation = cli::Ablation::None) {
    cli::RunOptions o;
    o.config_path = config;
    o.output_dir = out_dir;
    o.ablation = ablation;
    o.quiet = true;
    return capture([&](std::ostream& out, std::ostream& err) { return cli::cmd_run(o, out, err); });
}

}  // namespace

TEST(CliRun, WritesArtifacts) {
    TempDir dir("cli_run");
    const auto cfg = write_text(dir.path() / "toy.json", kToyConfig);
    const auto r = run_cli(cfg, dir.path() / "out");
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const Latent3 final_latent = to_latent(read_tensor(dir.path() / "out" / "final.acct"));
    EXPECT_EQ(final_latent.shape(), (Shape3{16, 16, 2}));
    for (const char* name : {"phase1_z0.acct", "attention.acct", "stage2_z0_upsampled.acct", "stage2_inverted.acct",
                             "stage2_z0.acct", "artifacts.json"}) {
        EXPECT_TRUE(fs::exists(dir.path() / "out" / name)) << name;
    }
    EXPECT_EQ(read_tensor(dir.path() / "out" / "stage2_inverted.acct").dims,
              (std::vector<std::uint64_t>{8, 16, 16, 2}));
    const auto artifacts = nlohmann::json::parse(std::ifstream(dir.path() / "out" / "artifacts.json"));
    const auto& prompts = artifacts.at("stages").at(0).at("prompts");
    ASSERT_EQ(prompts.size(), 4u);
    EXPECT_EQ(prompts.at(0).at("text"), "cat");
    EXPECT_EQ(prompts.at(3).at("text"), "dog");
}

TEST(CliRun, MalformedConfigFailsBeforeWriting) {
    TempDir dir("cli_bad");
    const auto cfg = write_text(dir.path() / "bad.json", "{\"steps\": 8,");
    const auto r = run_cli(cfg, dir.path() / "out");
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("config error"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir.path() / "out"));
    const auto empty_scene = write_text(dir.path() / "noscene.json", R"({"latent_h": 8, "latent_w": 8, "target_h": 8, "target_w": 8})");
    EXPECT_EQ(run_cli(empty_scene, dir.path() / "out").code, cli::kConfigError);
    EXPECT_FALSE(fs::exists(dir.path() / "out"));
}

TEST(CliRun, AblationChangesFinalLatent) {
    TempDir dir("cli_ablate");
    const auto cfg = write_text(dir.path() / "toy.json", kToyConfig);
    ASSERT_EQ(run_cli(cfg, dir.path() / "a").code, cli::kOk);
    ASSERT_EQ(run_cli(cfg, dir.path() / "b", cli::Ablation::NoPatchPrompts).code, cli::kOk);
    const auto a = to_latent(read_tensor(dir.path() / "a" / "final.acct"));
    const auto b = to_latent(read_tensor(dir.path() / "b" / "final.acct"));
    EXPECT_GT(max_abs_diff(a, b), 0.0);
    EXPECT_EQ(cli::parse_ablation("both"), cli::Ablation::Both);
    EXPECT_THROW(cli::parse_ablation("half"), Error);
}

TEST(CliDumpMasks, WritesThreeStagesPerToken) {
    TempDir dir("cli_masks");
    const auto cfg = write_text(dir.path() / "toy.json", kToyConfig);
    const auto r = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_dump_masks(cfg, dir.path() / "m", o, e);
    });
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path() / "m")) ++files;
    EXPECT_EQ(files, 6u);
    // Reading back the binarized stage equals binarizing the synthetic maps directly.
    SynthScene scene;
    scene.blobs.push_back({"cat", 0.25, 0.25, 0.15, 1.0});
    scene.blobs.push_back({"dog", 0.75, 0.75, 0.15, 1.0});
    const auto expected = binarize(synth_attention(scene, 8, 8));
    EXPECT_EQ(read_pgm(dir.path() / "m" / "00_cat_binarized.pgm"), expected[0]);
    EXPECT_EQ(read_pgm(dir.path() / "m" / "01_dog_binarized.pgm"), expected[1]);
    const auto up = read_pgm(dir.path() / "m" / "00_cat_upscaled.pgm");
    EXPECT_EQ(up.height(), 16u);
}

TEST(CliDumpMasks, ZeroAmplitudeBlobGivesBlackMasks) {
    TempDir dir("cli_zero");
    const auto cfg = write_text(dir.path() / "z.json", R"({"latent_h": 8, "latent_w": 8, "target_h": 16, "target_w": 16,
        "scene": {"blobs": [{"token": "ghost", "center": [0.5, 0.5], "radius": 0.2, "amplitude": 0.0}]}})");
    const auto r = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_dump_masks(cfg, dir.path() / "m", o, e);
    });
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    for (const char* stage : {"binarized", "opened", "upscaled"}) {
        EXPECT_EQ(read_pgm(dir.path() / "m" / (std::string("00_ghost_") + stage + ".pgm")).count_ones(), 0u);
    }
}

TEST(CliInspect, ReportsStatistics) {
    TempDir dir("cli_inspect");
    write_tensor(dir.path() / "zeros.acct", to_tensor(Latent3({2, 3, 4})));
    auto r = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_inspect(dir.path() / "zeros.acct", o, e); });
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_EQ(r.out, "dims=2x3x4 dtype=f32 count=24\nmin=0 max=0 mean=0 nan=0\n");

    const auto z = random_latent({5, 5, 3}, 9);
    write_tensor(dir.path() / "rand.acct", to_tensor(z));
    r = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_inspect(dir.path() / "rand.acct", o, e); });
    double lo = 1e9, hi = -1e9, sum = 0.0;
    for (float v : z.data()) {
        lo = std::min<double>(lo, v);
        hi = std::max<double>(hi, v);
        sum += v;
    }
    std::istringstream lines(r.out);
    std::string first, second;
    std::getline(lines, first);
    std::getline(lines, second);
    double got_lo = 0, got_hi = 0, got_mean = 0;
    ASSERT_EQ(std::sscanf(second.c_str(), "min=%lf max=%lf mean=%lf", &got_lo, &got_hi, &got_mean), 3);
    EXPECT_NEAR(got_lo, lo, 1e-6);
    EXPECT_NEAR(got_hi, hi, 1e-6);
    EXPECT_NEAR(got_mean, sum / 75.0, 1e-6);

    const std::string bytes = encode_tensor(to_tensor(z));
    write_text(dir.path() / "cut.acct", bytes.substr(0, bytes.size() - 3));
    r = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_inspect(dir.path() / "cut.acct", o, e); });
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("truncated payload"), std::string::npos);
}

TEST(CliReplay, ReportsParityAndDivergence) {
    TempDir good("cli_replay"), bad("cli_replay_bad");
    const auto fx = accdiff::testing::write_oracle_capture(good.path(), 6);
    auto r = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_replay(fx.manifest, 1e-3, good.path() / "replayed", o, e);
    });
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(r.out.rfind("replayed 6 steps", 0), 0u) << r.out;
    EXPECT_TRUE(fs::exists(good.path() / "replayed" / "z_0.acct"));

    const auto corrupt = accdiff::testing::write_oracle_capture(bad.path(), 6, 4);
    r = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_replay(corrupt.manifest, 1e-3, {}, o, e); });
    EXPECT_EQ(r.code, cli::kRuntimeError);
    EXPECT_EQ(r.out.rfind("diverged at step 4", 0), 0u) << r.out;

    write_text(bad.path() / "empty.json", "{}");
    r = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_replay(bad.path() / "empty.json", 1e-3, {}, o, e); });
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_EQ(r.out, "nothing to replay\n");
}

TEST(CliBinary, SmokeRunAndInspect) {
    const char* exe = std::getenv("ACCDIFF_CLI");
    if (!exe) GTEST_SKIP() << "ACCDIFF_CLI not set";
    TempDir dir("cli_bin");
    const auto cfg = write_text(dir.path() / "toy.json", kToyConfig);
    const std::string out = (dir.path() / "out").string();
    const std::string log = (dir.path() / "log.txt").string();
    const std::string run = std::string("\"") + exe + "\" run \"" + cfg.string() + "\" --out \"" + out +
                            "\" --workers 2 --quiet > \"" + log + "\" 2>&1";
    ASSERT_EQ(std::system(run.c_str()), 0);
    const std::string inspect = std::string("\"") + exe + "\" inspect \"" + out + "/final.acct\" > \"" + log + "\"";
    ASSERT_EQ(std::system(inspect.c_str()), 0);
    std::ifstream in(log);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "dims=16x16x2 dtype=f32 count=512");
    const std::string bad = std::string("\"") + exe + "\" run \"" + (dir.path() / "missing.json").string() +
                            "\" > /dev/null 2>&1";
    const int status = std::system(bad.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 1);
}
