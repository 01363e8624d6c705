#pragma once

// Command-line front end. Kept in a header so tests can drive the same code
// path in-process through run_cli().

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evs/evs.hpp"

namespace evs::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Raised for flag combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned threads = 0;
};

inline VideoClip load_clip(const fs::path& path) {
  if (fs::is_directory(path)) return io::read_image_sequence(path);
  return io::read_clip(path);
}

inline std::string join_counts(const std::vector<std::size_t>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? " " : "") << v[i];
  return s.str();
}

inline void print_retention(std::ostream& out, const RetentionMask& mask) {
  const auto r = stream_stats(mask);
  out << "retained " << r.retained << "/" << r.total_sites << " fraction " << std::setprecision(6)
      << r.retained_fraction << "\n";
  out << "per-frame " << join_counts(r.per_frame) << "\n";
}

// --- mask --------------------------------------------------------------------

struct MaskArgs {
  std::string input;
  std::string selector;
  double q = 0.0;
  std::string mode = "exact-budget";
  int patch_size = 16;
  int downsample = 1;
  std::string out;
};

inline RetentionMask compute_evs_mask(const std::string& selector, const fs::path& input,
                                      const PruningConfig& config, int patch_size,
                                      int downsample, unsigned threads) {
  const bool is_dir = fs::is_directory(input);
  const std::string kind = is_dir ? std::string("clip") : io::peek_kind(input);
  if (selector == "rgb") {
    if (kind != "clip")
      throw UsageError("the rgb selector needs a clip or a frame directory, got a " + kind +
                       " file");
    const VideoClip clip = load_clip(input);
    const PatchGeometry geom(static_cast<int>(clip.width()), static_cast<int>(clip.height()),
                             patch_size, downsample);
    return build_mask_rgb(clip, geom, config, threads);
  }
  if (kind != "embedding")
    throw UsageError("the embedding selector needs an embedding file, got a " + kind);
  return build_mask_embedding(io::read_embeddings(input), config, threads);
}

inline int cmd_mask(const MaskArgs& a, Context& ctx) {
  PruningConfig config;
  config.pruning_rate = a.q;
  config.mode = threshold_mode_from(a.mode);
  const RetentionMask mask =
      compute_evs_mask(a.selector, a.input, config, a.patch_size, a.downsample, ctx.threads);
  io::write_mask(mask, a.out);
  ctx.out << "selector " << a.selector << " mode " << a.mode << " q " << a.q << "\n";
  print_retention(ctx.out, mask);
  return kExitOk;
}

// --- prune -------------------------------------------------------------------

struct PruneArgs {
  std::string embeddings;
  std::string mask;
  std::string positions;
  std::string out;
};

inline int cmd_prune(const PruneArgs& a, Context& ctx) {
  const RetentionMask mask = io::read_mask(a.mask);
  const PositionMode mode = position_mode_from(a.positions);
  TokenStream stream;
  if (a.embeddings.empty()) {
    stream = gather_tokens(mask, mode);
  } else {
    const EmbeddingGrid grid = io::read_embeddings(a.embeddings);
    stream = gather_tokens(grid, mask, mode);
  }
  io::write_tokens(stream, a.out);
  ctx.out << "tokens " << stream.entries.size() << " position-mode " << to_string(mode)
          << " source-tokens " << stream.source_token_count() << "\n";
  return kExitOk;
}

// --- compare -----------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> methods;
  double q = 0.75;
  std::string clip;
  std::string embeddings;
  std::string selector;
  std::string mode = "exact-budget";
  int patch_size = 16;
  int downsample = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
};

inline int cmd_compare(const CompareArgs& a, Context& ctx) {
  if (a.clip.empty() && a.embeddings.empty())
    throw UsageError("compare needs --clip and/or --embeddings");
  std::vector<std::string> methods = a.methods;
  if (methods.empty()) {
    methods = {"evs", "random", "subsample"};
    if (!a.embeddings.empty()) methods.push_back("merge");
  }
  for (const auto& m : methods)
    if (m != "evs" && m != "random" && m != "subsample" && m != "merge")
      throw UsageError("unknown method '" + m + "'");
  if (std::find(methods.begin(), methods.end(), "merge") != methods.end() &&
      a.embeddings.empty())
    throw UsageError("the merge baseline needs --embeddings");

  std::optional<GridShape> grid;
  std::optional<EmbeddingGrid> features;
  if (!a.embeddings.empty()) {
    features = io::read_embeddings(a.embeddings);
    grid = features->shape();
  }
  if (!a.clip.empty()) {
    const VideoClip clip = load_clip(a.clip);
    const PatchGeometry geom(static_cast<int>(clip.width()), static_cast<int>(clip.height()),
                             a.patch_size, a.downsample);
    const GridShape from_clip = geom.grid(clip.frames());
    if (grid && !(*grid == from_clip))
      throw UsageError("clip grid " + to_string(from_clip) + " differs from embedding grid " +
                       to_string(*grid));
    grid = from_clip;
  }
  const std::string selector =
      !a.selector.empty() ? a.selector : (a.clip.empty() ? "embedding" : "rgb");
  const std::size_t budget = exact_budget_count(*grid, a.q);

  fs::create_directories(a.out_dir);
  std::map<std::string, RetentionMask> masks;
  std::ostringstream csv;
  csv << "method,retained,total,fraction,budget,deviation\n";
  ctx.out << "grid " << to_string(*grid) << " q " << a.q << " budget " << budget << "\n";

  const auto report = [&](const std::string& name, std::size_t retained) {
    const double frac = static_cast<double>(retained) / static_cast<double>(grid->sites());
    const long long dev = static_cast<long long>(retained) - static_cast<long long>(budget);
    ctx.out << name << " retained " << retained << " fraction " << std::setprecision(6) << frac
            << " deviation " << dev << "\n";
    csv << name << "," << retained << "," << grid->sites() << "," << std::setprecision(10)
        << frac << "," << budget << "," << dev << "\n";
  };

  for (const auto& m : methods) {
    if (m == "evs") {
      PruningConfig config;
      config.pruning_rate = a.q;
      config.mode = threshold_mode_from(a.mode);
      const fs::path input = selector == "rgb" ? fs::path(a.clip) : fs::path(a.embeddings);
      if (input.empty()) throw UsageError("the " + selector + " selector has no input file");
      masks.emplace(m, compute_evs_mask(selector, input, config, a.patch_size, a.downsample,
                                        ctx.threads));
    } else if (m == "random") {
      masks.emplace(m, random_mask(*grid, a.q, a.seed));
    } else if (m == "subsample") {
      masks.emplace(m, subsample_mask(*grid, a.q));
      ctx.out << "subsample kept frames " << join_counts(subsample_frames(grid->frames, a.q))
              << "\n";
    } else {
      const MergeResult merged = merge_tokens_to(*features, budget, PositionMode::preserving);
      io::write_tokens(merged.stream, fs::path(a.out_dir) / "merge.evst");
      report(m, merged.stream.entries.size());
      continue;
    }
    io::write_mask(masks.at(m), fs::path(a.out_dir) / (m + ".evsm"));
    report(m, masks.at(m).kept_count());
  }

  csv << "\nmethod_a,method_b,overlap,disagreement\n";
  for (auto i = masks.begin(); i != masks.end(); ++i)
    for (auto j = std::next(i); j != masks.end(); ++j) {
      const auto ov = overlap_count(i->second, j->second);
      const auto dis = disagreement_count(i->second, j->second);
      ctx.out << "overlap " << i->first << " " << j->first << " " << ov << " disagreement "
              << dis << "\n";
      csv << i->first << "," << j->first << "," << ov << "," << dis << "\n";
    }
  const std::string text = csv.str();
  io::write_file_atomic(fs::path(a.out_dir) / "summary.csv",
                        std::vector<std::uint8_t>(text.begin(), text.end()));
  return kExitOk;
}

// --- cost --------------------------------------------------------------------

struct CostArgs {
  std::vector<double> q{0.75};
  std::string model = "7B";
  std::string calibration;
  std::string export_calibration;
  std::string csv;
  std::uint64_t vision_tokens = 0;
  std::uint64_t text_tokens = 0;
  std::uint64_t anchor_tokens = 0;
  cost::KVCacheSpec kv;
};

inline int cmd_cost(const CostArgs& a, Context& ctx) {
  if (!a.export_calibration.empty()) {
    io::write_table(cost::calibration_file_table(), a.export_calibration);
    ctx.out << "wrote calibration table to " << a.export_calibration << "\n";
  }
  const cost::LatencyTable table =
      a.calibration.empty() ? cost::embedded_table(a.model)
                            : cost::table_from_file(io::read_table(a.calibration), a.model);
  const cost::SpeedupReport rep = cost::speedup_report(a.q, table);
  ctx.out << cost::format_speedup_text(rep);
  if (!a.csv.empty()) {
    const std::string text = cost::format_speedup_csv(rep);
    io::write_file_atomic(a.csv, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  if (a.vision_tokens > 0 && a.kv.kv_dim_per_token > 0) {
    ctx.out << "q      seq_len    kv_cache_MiB   total_MiB\n";
    for (double q : a.q) {
      cost::KVCacheSpec spec = a.kv;
      spec.seq_len = cost::pruned_seq_len(a.vision_tokens, q, a.text_tokens, a.anchor_tokens);
      ctx.out << std::fixed << std::setprecision(2) << std::left << std::setw(7) << q
              << std::setw(11) << spec.seq_len << std::setprecision(3) << std::setw(15)
              << cost::kv_cache_memory(spec) << cost::total_attention_memory(spec) << "\n";
      ctx.out.unsetf(std::ios::fixed | std::ios::left);
    }
  }
  return kExitOk;
}

// --- sample-rate -------------------------------------------------------------

struct SampleArgs {
  double mode_target = 0.75;
  double concentration = 20.0;
  double n = 1;
  std::uint64_t seed = 0;
  int bins = 100;
  bool summary_only = false;
};

inline int cmd_sample_rate(const SampleArgs& a, Context& ctx) {
  if (a.n < 1 || a.n != std::floor(a.n)) throw UsageError("--n must be a positive integer");
  if (a.bins < 1) throw UsageError("--bins must be positive");
  const BetaRateSpec spec(a.mode_target, a.concentration);
  RateSampler sampler(spec, a.seed);
  const auto n = static_cast<std::size_t>(a.n);
  std::vector<std::size_t> hist(static_cast<std::size_t>(a.bins), 0);
  double sum = 0.0;
  ctx.out << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = sampler();
    sum += q;
    ++hist[std::min(hist.size() - 1, static_cast<std::size_t>(q * a.bins))];
    if (!a.summary_only) ctx.out << q << "\n";
  }
  const auto peak = static_cast<std::size_t>(
      std::max_element(hist.begin(), hist.end()) - hist.begin());
  ctx.out << std::setprecision(6);
  ctx.out << "# alpha " << spec.alpha() << " beta " << spec.beta() << "\n";
  ctx.out << "# draws " << n << " seed " << a.seed << "\n";
  ctx.out << "# mean " << sum / static_cast<double>(n) << "\n";
  ctx.out << "# histogram-mode " << (static_cast<double>(peak) + 0.5) / a.bins << "\n";
  return kExitOk;
}

// --- stats -------------------------------------------------------------------

struct StatsArgs {
  std::string mask;
  std::string against;
};

inline int cmd_stats(const StatsArgs& a, Context& ctx) {
  const RetentionMask mask = io::read_mask(a.mask);
  ctx.out << "grid " << to_string(mask.shape) << " selector " << to_string(mask.selector)
          << " q " << mask.pruning_rate_used << "\n";
  print_retention(ctx.out, mask);
  if (!a.against.empty()) {
    const RetentionMask other = io::read_mask(a.against);
    ctx.out << "disagreement " << disagreement_count(mask, other) << "\n";
    ctx.out << "overlap " << overlap_count(mask, other) << "\n";
  }
  return kExitOk;
}

// --- viz ---------------------------------------------------------------------

struct VizArgs {
  std::string clip;
  std::string mask;
  std::string out_dir;
  int patch_size = 16;
  int downsample = 1;
  double darken = 0.25;
};

/// Frame overlays: pixels of pruned patches are scaled by `darken`.
inline std::vector<io::RgbImage> render_overlays(const VideoClip& clip, const PatchGeometry& geom,
                                                 const RetentionMask& mask, double darken) {
  require(mask.shape == geom.grid(clip.frames()),
          "mask grid " + to_string(mask.shape) + " does not cover the clip grid " +
              to_string(geom.grid(clip.frames())));
  std::vector<io::RgbImage> frames;
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    io::RgbImage img = io::frame_to_rgb(clip, t);
    for (int gy = 0; gy < geom.grid_height(); ++gy)
      for (int gx = 0; gx < geom.grid_width(); ++gx) {
        const TokenSite site{static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(gy),
                             static_cast<std::uint32_t>(gx)};
        if (mask.kept(site)) continue;
        const PatchRect r = geom.patch_rect(gy, gx);
        for (int y = r.y0; y < r.y1; ++y)
          for (int x = r.x0; x < r.x1; ++x)
            for (int c = 0; c < 3; ++c) {
              auto& px = img.rgb[3 * (static_cast<std::size_t>(y) * img.width + x) + c];
              px = static_cast<std::uint8_t>(std::lround(px * darken));
            }
      }
    frames.push_back(std::move(img));
  }
  return frames;
}

inline int cmd_viz(const VizArgs& a, Context& ctx) {
  const VideoClip clip = load_clip(a.clip);
  const RetentionMask mask = io::read_mask(a.mask);
  const PatchGeometry geom(static_cast<int>(clip.width()), static_cast<int>(clip.height()),
                           a.patch_size, a.downsample);
  const auto frames = render_overlays(clip, geom, mask, a.darken);
  fs::create_directories(a.out_dir);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << t << ".ppm";
    io::write_ppm(frames[t], fs::path(a.out_dir) / name.str());
  }
  ctx.out << "wrote " << frames.size() << " overlay frames to " << a.out_dir << "\n";
  return kExitOk;
}

// --- entry point -------------------------------------------------------------

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Efficient video sampling: temporal token pruning toolkit", "evs"};
  app.require_subcommand(1);
  Context ctx{out, err, detail::threads_from_env()};

  const auto rate_check = CLI::Range(0.0, 1.0);
  const std::vector<std::string> selectors{"rgb", "embedding"};
  const std::vector<std::string> modes{"threshold", "exact-budget"};

  MaskArgs mask_args;
  auto* mask = app.add_subcommand("mask", "compute an EVS retention mask");
  mask->add_option("input", mask_args.input, "clip/embedding file or frame directory")
      ->required();
  mask->add_option("--selector", mask_args.selector)->required()->check(CLI::IsMember(selectors));
  mask->add_option("--q", mask_args.q, "pruning rate in [0, 1)")->required()->check(rate_check);
  mask->add_option("--mode", mask_args.mode, "threshold or exact-budget")->capture_default_str()
      ->check(CLI::IsMember(modes));
  mask->add_option("--patch-size", mask_args.patch_size, "encoder stem patch (pixels)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  mask->add_option("--downsample", mask_args.downsample, "projector downsampling")->capture_default_str()
      ->check(CLI::PositiveNumber);
  mask->add_option("--out", mask_args.out)->required();

  PruneArgs prune_args;
  auto* prune = app.add_subcommand("prune", "gather retained tokens with position ids");
  prune->add_option("--embeddings", prune_args.embeddings);
  prune->add_option("--mask", prune_args.mask)->required();
  prune->add_option("--positions", prune_args.positions)
      ->required()
      ->check(CLI::IsMember({"preserve", "preserving", "sequential"}));
  prune->add_option("--out", prune_args.out)->required();

  CompareArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "EVS against baselines at a matched budget");
  compare->add_option("--method", cmp_args.methods, "evs, random, subsample, merge")
      ->delimiter(',');
  compare->add_option("--q", cmp_args.q, "pruning rate")->capture_default_str()->check(rate_check);
  compare->add_option("--clip", cmp_args.clip);
  compare->add_option("--embeddings", cmp_args.embeddings);
  compare->add_option("--selector", cmp_args.selector)->check(CLI::IsMember(selectors));
  compare->add_option("--mode", cmp_args.mode, "")->capture_default_str()->check(CLI::IsMember(modes));
  compare->add_option("--patch-size", cmp_args.patch_size, "")->capture_default_str()->check(CLI::PositiveNumber);
  compare->add_option("--downsample", cmp_args.downsample, "")->capture_default_str()->check(CLI::PositiveNumber);
  compare->add_option("--seed", cmp_args.seed, "")->capture_default_str();
  compare->add_option("--out-dir", cmp_args.out_dir)->required();

  CostArgs cost_args;
  auto* cost_cmd = app.add_subcommand("cost", "TTFT speedup and KV-cache memory report");
  cost_cmd->add_option("--q", cost_args.q, "pruning rates")->capture_default_str()
      ->delimiter(',')
      ->check(rate_check);
  cost_cmd->add_option("--model", cost_args.model, "7B or 14B")->capture_default_str()
      ->check(CLI::IsMember(cost::model_tags()));
  cost_cmd->add_option("--calibration", cost_args.calibration, "calibration table file");
  cost_cmd->add_option("--export-calibration", cost_args.export_calibration);
  cost_cmd->add_option("--csv", cost_args.csv, "write the speedup table as CSV");
  cost_cmd->add_option("--vision-tokens", cost_args.vision_tokens);
  cost_cmd->add_option("--text-tokens", cost_args.text_tokens);
  cost_cmd->add_option("--anchor-tokens", cost_args.anchor_tokens);
  cost_cmd->add_option("--batch", cost_args.kv.batch, "")->capture_default_str();
  cost_cmd->add_option("--queue", cost_args.kv.prefill_queue, "")->capture_default_str();
  cost_cmd->add_option("--kv-dim", cost_args.kv.kv_dim_per_token);
  cost_cmd->add_option("--kv-bytes", cost_args.kv.kv_elem_bytes, "")->capture_default_str()
      ->check(CLI::IsMember({1, 2, 4, 8}));
  cost_cmd->add_option("--weight-bytes", cost_args.kv.weight_elem_bytes, "")->capture_default_str()
      ->check(CLI::IsMember({1, 2, 4, 8}));
  cost_cmd->add_option("--model-dim", cost_args.kv.model_dim);
  cost_cmd->add_option("--attn-params", cost_args.kv.attn_params);
  cost_cmd->add_flag("--query-prefill", cost_args.kv.query_prefill);

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample-rate", "seeded Beta draws of the pruning rate");
  sample->add_option("--mode-target", sample_args.mode_target)->required();
  sample->add_option("--concentration", sample_args.concentration, "")->capture_default_str();
  sample->add_option("--n", sample_args.n, "number of draws")->capture_default_str();
  sample->add_option("--seed", sample_args.seed, "")->capture_default_str();
  sample->add_option("--bins", sample_args.bins, "histogram bins")->capture_default_str();
  sample->add_flag("--summary-only", sample_args.summary_only);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "retention statistics of a mask");
  stats->add_option("mask", stats_args.mask)->required();
  stats->add_option("--against", stats_args.against, "second mask for a site-wise comparison");

  VizArgs viz_args;
  auto* viz = app.add_subcommand("viz", "write PPM overlays with pruned patches darkened");
  viz->add_option("--clip", viz_args.clip)->required();
  viz->add_option("--mask", viz_args.mask)->required();
  viz->add_option("--out-dir", viz_args.out_dir)->required();
  viz->add_option("--patch-size", viz_args.patch_size, "")->capture_default_str()->check(CLI::PositiveNumber);
  viz->add_option("--downsample", viz_args.downsample, "")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*mask) {
      if (mask_args.q >= 1.0) throw UsageError("--q must be below 1");
      return cmd_mask(mask_args, ctx);
    }
    if (*prune) return cmd_prune(prune_args, ctx);
    if (*compare) {
      if (cmp_args.q >= 1.0) throw UsageError("--q must be below 1");
      return cmd_compare(cmp_args, ctx);
    }
    if (*cost_cmd) {
      for (double q : cost_args.q)
        if (q >= 1.0) throw UsageError("--q must be below 1");
      return cmd_cost(cost_args, ctx);
    }
    if (*sample) return cmd_sample_rate(sample_args, ctx);
    if (*stats) return cmd_stats(stats_args, ctx);
    if (*viz) return cmd_viz(viz_args, ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace evs::cli
