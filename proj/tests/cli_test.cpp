#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "evs/evs.hpp"
#include "evs_cli.hpp"
#include "oracles.hpp"

namespace evs {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

// Value following `key ` on the first line that contains it.
std::string field(const std::string& text, const std::string& key) {
  const auto p = text.find(key + " ");
  if (p == std::string::npos) return {};
  std::istringstream s(text.substr(p + key.size() + 1));
  std::string v;
  s >> v;
  return v;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("evs_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, MaskExactBudgetHitsRequestedFraction) {
  std::mt19937_64 rng(60);
  io::write_clip(oracle::random_u8_clip(rng, 9, 64, 64), path("clip.tbin"));
  CliRun r = cli({"mask", path("clip.tbin"), "--selector", "rgb", "--q", "0.75", "--out",
               path("m.evsm")});
  ASSERT_EQ(r.code, 0) << r.err;
  // 16 anchor sites + round(0.25 * 128)
  EXPECT_EQ(field(r.out, "retained"), "48/144");
  const RetentionMask m = io::read_mask(path("m.evsm"));
  EXPECT_EQ(m.kept_count(), 48u);
  EXPECT_EQ(m.pruning_rate_used, 0.75);

  r = cli({"mask", path("clip.tbin"), "--selector", "rgb", "--q", "0", "--out", path("m0.evsm")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(field(r.out, "fraction"), "1");
}

TEST_F(CliTest, MaskMatchesLibraryAndOracle) {
  std::mt19937_64 rng(61);
  const VideoClip clip = oracle::random_u8_clip(rng, 5, 40, 48);
  io::write_clip(clip, path("clip.tbin"));
  ASSERT_EQ(cli({"mask", path("clip.tbin"), "--selector", "rgb", "--q", "0.6", "--patch-size",
                 "4", "--downsample", "2", "--mode", "threshold", "--out", path("m.evsm")})
                .code,
            0);
  const auto bits = oracle::mask_bits(oracle::rgb_diffs(clip, 8), 5 * 6, 0.6, false);
  EXPECT_EQ(io::read_mask(path("m.evsm")).bits, bits);
}

TEST_F(CliTest, SelectorDisagreementMatchesXorOracle) {
  std::mt19937_64 rng(62);
  const VideoClip clip = oracle::random_u8_clip(rng, 6, 32, 32);
  const PatchGeometry geom(32, 32, 8);
  const EmbeddingGrid grid = oracle::random_grid(rng, geom.grid(6), 16);
  io::write_clip(clip, path("clip.tbin"));
  io::write_embeddings(grid, path("emb.tbin"));
  ASSERT_EQ(cli({"mask", path("clip.tbin"), "--selector", "rgb", "--q", "0.5", "--patch-size",
                 "8", "--out", path("rgb.evsm")})
                .code,
            0);
  ASSERT_EQ(cli({"mask", path("emb.tbin"), "--selector", "embedding", "--q", "0.5", "--out",
                 path("emb.evsm")})
                .code,
            0);
  const CliRun r = cli({"stats", path("rgb.evsm"), "--against", path("emb.evsm")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a = oracle::mask_bits(oracle::rgb_diffs(clip, 8), 16, 0.5, true);
  const auto b = oracle::mask_bits(oracle::embedding_diffs(grid), 16, 0.5, true);
  std::size_t x = 0;
  for (std::size_t i = 0; i < a.size(); ++i) x += a[i] != b[i];
  EXPECT_EQ(field(r.out, "disagreement"), std::to_string(x));
}

TEST_F(CliTest, SelectorAndInputKindMustAgree) {
  std::mt19937_64 rng(63);
  io::write_clip(oracle::random_u8_clip(rng, 3, 16, 16), path("clip.tbin"));
  io::write_embeddings(oracle::random_grid(rng, {3, 2, 2}, 4), path("emb.tbin"));
  CliRun r = cli({"mask", path("clip.tbin"), "--selector", "embedding", "--q", "0.5", "--out",
               path("m.evsm")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("embedding"), std::string::npos);
  r = cli({"mask", path("emb.tbin"), "--selector", "rgb", "--q", "0.5", "--out", path("m.evsm")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("m.evsm")));
}

TEST_F(CliTest, BadArgumentsAreUsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"mask", "x", "--selector", "rgb", "--q", "0.5", "--out", "y", "--bogus"}).code, 2);
  EXPECT_EQ(cli({"mask", "x", "--selector", "hsv", "--q", "0.5", "--out", "y"}).code, 2);
  EXPECT_EQ(cli({"mask", "x", "--selector", "rgb", "--q", "1", "--out", "y"}).code, 2);
  EXPECT_EQ(cli({"mask", "x", "--selector", "rgb", "--q", "-0.1", "--out", "y"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
}

TEST_F(CliTest, MissingInputIsARuntimeFailure) {
  const CliRun r = cli({"mask", path("absent.tbin"), "--selector", "rgb", "--q", "0.5", "--out",
                     path("m.evsm")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, PrunePipelineMatchesLibrary) {
  std::mt19937_64 rng(64);
  const EmbeddingGrid grid = oracle::random_grid(rng, {4, 3, 5}, 6);
  io::write_embeddings(grid, path("emb.tbin"));
  ASSERT_EQ(cli({"mask", path("emb.tbin"), "--selector", "embedding", "--q", "0.7", "--out",
                 path("m.evsm")})
                .code,
            0);
  for (const std::string mode : {"preserve", "sequential"}) {
    const CliRun r = cli({"prune", "--embeddings", path("emb.tbin"), "--mask", path("m.evsm"),
                       "--positions", mode, "--out", path("t.evst")});
    ASSERT_EQ(r.code, 0) << r.err;
    PruningConfig c;
    c.pruning_rate = 0.7;
    const TokenStream want =
        gather_tokens(grid, build_mask_embedding(grid, c), position_mode_from(mode));
    const TokenStream got = io::read_tokens(path("t.evst"));
    ASSERT_EQ(got.entries.size(), want.entries.size());
    for (std::size_t i = 0; i < got.entries.size(); ++i) {
      EXPECT_EQ(got.entries[i].position_id, want.entries[i].position_id);
      EXPECT_EQ(got.entries[i].payload, want.entries[i].payload);
      if (mode == "sequential") EXPECT_EQ(got.entries[i].position_id, i);
      else EXPECT_EQ(got.entries[i].position_id, flat_index(got.entries[i].site, grid.shape()));
    }
  }
  EXPECT_EQ(cli({"prune", "--mask", path("m.evsm"), "--positions", "shuffled", "--out",
                 path("t.evst")})
                .code,
            2);
}

TEST_F(CliTest, CompareBudgetsAndSubsampleFrames) {
  std::mt19937_64 rng(65);
  const VideoClip clip = oracle::random_u8_clip(rng, 32, 32, 32);
  const PatchGeometry geom(32, 32, 8);
  io::write_clip(clip, path("clip.tbin"));
  io::write_embeddings(oracle::random_grid(rng, geom.grid(32), 8), path("emb.tbin"));
  const CliRun r = cli({"compare", "--clip", path("clip.tbin"), "--embeddings", path("emb.tbin"),
                     "--patch-size", "8", "--q", "0.75", "--seed", "3", "--out-dir",
                     path("cmp")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("subsample kept frames 0 4 9 13 18 22 27 31"), std::string::npos) << r.out;
  const std::size_t budget = exact_budget_count(geom.grid(32), 0.75);
  for (const std::string m : {"evs", "random", "subsample", "merge"}) {
    const auto dev = std::stoll(field(r.out.substr(r.out.find(m + " retained")), "deviation"));
    EXPECT_LE(std::llabs(dev), 16) << m;
  }
  EXPECT_EQ(io::read_mask(path("cmp/evs.evsm")).kept_count(), budget);
  EXPECT_EQ(io::read_mask(path("cmp/random.evsm")).kept_count(), budget);
  EXPECT_EQ(io::read_tokens(path("cmp/merge.evst")).entries.size(), budget);
  EXPECT_TRUE(fs::exists(path("cmp/summary.csv")));

  const CliRun bad = cli({"compare", "--clip", path("clip.tbin"), "--method", "merge",
                       "--patch-size", "8", "--out-dir", path("cmp2")});
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, CostReportsTableSpeedup) {
  CliRun r = cli({"cost", "--q", "0.75", "--model", "7B"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("3.93x"), std::string::npos) << r.out;
  r = cli({"cost", "--q", "0.9", "--model", "7B", "--export-calibration", path("cal.tbin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("note: q=0.90"), std::string::npos);
  r = cli({"cost", "--q", "0.8", "--model", "14B", "--calibration", path("cal.tbin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2.45x"), std::string::npos) << r.out;
  r = cli({"cost", "--q", "0.75", "--vision-tokens", "1000", "--text-tokens", "100", "--kv-dim",
           "1024"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("350"), std::string::npos) << r.out;
  EXPECT_EQ(cli({"cost", "--model", "3B"}).code, 2);
}

TEST_F(CliTest, SampleRateHistogramPeaksAtMode) {
  const CliRun r = cli({"sample-rate", "--mode-target", "0.75", "--n", "1e6", "--seed", "1",
                     "--summary-only"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(field(r.out, "# histogram-mode")), 0.75, 0.02);
  EXPECT_NEAR(std::stod(field(r.out, "# mean")), 14.5 / 20.0, 0.002);
  EXPECT_EQ(cli({"sample-rate", "--mode-target", "0.75", "--concentration", "2"}).code, 1);
}

TEST_F(CliTest, SampleRateIsReproducible) {
  const auto a = cli({"sample-rate", "--mode-target", "0.6", "--n", "50", "--seed", "9"});
  const auto b = cli({"sample-rate", "--mode-target", "0.6", "--n", "50", "--seed", "9"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, cli({"sample-rate", "--mode-target", "0.6", "--n", "50", "--seed", "10"}).out);
}

TEST_F(CliTest, VizWithFullMaskReproducesFrames) {
  std::mt19937_64 rng(66);
  const VideoClip clip = oracle::random_u8_clip(rng, 3, 20, 28);
  const PatchGeometry geom(28, 20, 8);
  io::write_clip(clip, path("clip.tbin"));
  io::write_mask(RetentionMask::all_ones(geom.grid(3), 0.0, SelectorTag::rgb), path("ones.evsm"));
  ASSERT_EQ(cli({"viz", "--clip", path("clip.tbin"), "--mask", path("ones.evsm"), "--patch-size",
                 "8", "--out-dir", path("viz")})
                .code,
            0);
  for (std::size_t t = 0; t < 3; ++t) {
    std::ostringstream name;
    name << "viz/frame_000" << t << ".ppm";
    const io::RgbImage img = io::read_pnm(path(name.str()));
    EXPECT_EQ(img.rgb, io::frame_to_rgb(clip, t).rgb);
  }
  // a pruned patch is darkened, kept ones are untouched
  RetentionMask m = RetentionMask::all_ones(geom.grid(3), 0.5, SelectorTag::rgb);
  m.bits[geom.grid(3).sites_per_frame()] = 0;
  const auto frames = cli::render_overlays(clip, geom, m, 0.25);
  const auto orig = io::frame_to_rgb(clip, 1);
  EXPECT_EQ(frames[1].rgb[0], std::lround(orig.rgb[0] * 0.25));
  EXPECT_EQ(frames[1].rgb.back(), orig.rgb.back());
}

TEST_F(CliTest, FrameDirectoryInput) {
  std::mt19937_64 rng(67);
  const VideoClip clip = oracle::random_u8_clip(rng, 4, 16, 24);
  fs::create_directories(path("frames"));
  for (std::size_t t = 0; t < 4; ++t)
    io::write_ppm(io::frame_to_rgb(clip, t), path("frames/f" + std::to_string(t) + ".ppm"));
  ASSERT_EQ(cli({"mask", path("frames"), "--selector", "rgb", "--q", "0.5", "--patch-size", "8",
                 "--out", path("a.evsm")})
                .code,
            0);
  io::write_clip(clip, path("clip.tbin"));
  ASSERT_EQ(cli({"mask", path("clip.tbin"), "--selector", "rgb", "--q", "0.5", "--patch-size", "8",
                 "--out", path("b.evsm")})
                .code,
            0);
  EXPECT_EQ(io::read_mask(path("a.evsm")).bits, io::read_mask(path("b.evsm")).bits);
}

TEST(CliBinary, ExitCodes) {
  const char* exe = std::getenv("EVS_CLI");
  if (exe == nullptr) GTEST_SKIP() << "EVS_CLI not set";
  const auto status = [&](const std::string& args) {
    const int s = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("cost --q 0.75"), 0);
  EXPECT_EQ(status("cost --nonsense"), 2);
  EXPECT_EQ(status("stats /nonexistent/mask.evsm"), 1);
}

}  // namespace
}  // namespace evs
