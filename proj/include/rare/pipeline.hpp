#pragma once

// End-to-end pipelines behind the `rare` command-line tool. Every run writes
// a manifest (flat `key = value` text) that, fed back through --config,
// reproduces the run's artifacts.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rare/data.hpp"
#include "rare/model.hpp"
#include "rare/riskdist.hpp"
#include "rare/synthgen.hpp"

namespace rare {

inline constexpr std::string_view kVersion = "0.1.0";

struct RunConfig {
  std::string data;
  std::string out = "rare-out";
  std::string model;     // checkpoint for evaluate/recommend; default <out>/model.ckpt
  std::string baseline;  // "" or "bpr"
  TrainConfig train;
  std::vector<std::size_t> cutoffs{5, 10, 20, 50};
  std::size_t min_count = 10;
  std::optional<double> price_fallback;
  std::size_t topk = 10;
  std::string user;  // recommend for one user id only
  SynthSpec synth;
};

/// Applies one `key = value` setting. Keys are the long flag names without
/// the leading dashes (seed, k, lr, reg, epochs, negatives, mode, cutoffs,
/// threads, baseline, data, out, model, batch-size, patience, min-count,
/// price-fallback, topk, user, synth-*). `seed` also sets synth-seed.
/// Throws std::invalid_argument.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Reads a flat key-value file ('#' starts a comment). Unknown keys are
/// errors; `command` and `version` lines are accepted and ignored.
void load_config(std::istream& in, RunConfig& config);
RunConfig load_config_file(const std::filesystem::path& path);

/// Every setting in `key = value` form, preceded by command and version.
void write_manifest(std::ostream& out, std::string_view command, const RunConfig& config);

std::vector<std::size_t> parse_cutoffs(std::string_view text);

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> kCommands = {"ingest", "fit-dist", "train", "evaluate",
                                                     "recommend", "synth", "ablate"};
  return kCommands;
}

/// Parsed, filtered and split interactions with resolved item side.
struct PreparedData {
  ParseResult parsed;
  SplitDataset split;
  ItemSide items;
};

PreparedData prepare_data(const RunConfig& config);

using ProgressFn = std::function<void(std::string_view)>;

/// Runs one pipeline. Artifacts land in config.out. Throws on failure.
void run(std::string_view command, const RunConfig& config, const ProgressFn& progress = {});

/// `item_id,c1,c2,c3,c4,c5` in, `item_id,p1,p2,p3,p4,p5,source` out.
void fit_distributions_csv(std::istream& in, std::ostream& out);

}  // namespace rare
