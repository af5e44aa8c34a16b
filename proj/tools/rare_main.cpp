// rare: command-line driver for the risk-aware recommender pipelines.

#include <cstdlib>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rare/pipeline.hpp"

namespace {

struct Flag {
  const char* name;  // setting key, also the long flag name
  const char* help;
};

// Every flag maps 1:1 onto a RunConfig setting.
const std::vector<Flag> kFlags = {
    {"data", "input CSV (interactions, or item counts for fit-dist)"},
    {"out", "output directory"},
    {"model", "checkpoint to load (default <out>/model.ckpt)"},
    {"baseline", "train the BPR-MF baseline instead (value: bpr)"},
    {"seed", "random seed"},
    {"k", "latent dimension"},
    {"lr", "SGD learning rate"},
    {"reg", "L2 regularization weight"},
    {"epochs", "maximum training epochs"},
    {"negatives", "sampled negatives per positive during training"},
    {"batch-size", "mini-batch size"},
    {"patience", "early-stopping patience in epochs"},
    {"mode", "full | no-vf | no-wf | no-rp"},
    {"cutoffs", "comma-separated K list for F1@K / NDCG@K"},
    {"threads", "evaluation worker threads"},
    {"min-count", "minimum interactions per user and item"},
    {"price-fallback", "price assigned to rows without one (default: drop them)"},
    {"topk", "recommendation list length"},
    {"user", "recommend for this user id only"},
    {"synth-users", "synthetic users"},
    {"synth-items", "synthetic items"},
    {"synth-k", "latent dimension of the true parameters"},
    {"synth-interactions", "interactions per synthetic user"},
    {"synth-price-min", "lowest synthetic price"},
    {"synth-price-max", "highest synthetic price"},
    {"synth-concentration", "peakedness of synthetic rating distributions"},
    {"synth-choice-set", "items offered per synthetic choice"},
    {"synth-seed", "seed for synthetic data (default: --seed)"},
};

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");
  if (const char* level = std::getenv("RARE_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Risk-aware recommendation with personalized prospect theory"};
  app.set_version_flag("--version", std::string(rare::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> given;
  std::vector<std::string> values(kFlags.size());

  const std::vector<std::pair<std::string, std::string>> descriptions = {
      {"ingest", "parse, filter and split a transaction log"},
      {"fit-dist", "resolve item rating distributions from a counts CSV"},
      {"train", "train the prospect model (or --baseline bpr)"},
      {"evaluate", "rank held-out items against 100 sampled negatives"},
      {"recommend", "write top-K lists per user"},
      {"synth", "generate a synthetic population with known parameters"},
      {"ablate", "train and evaluate all four model variants"},
  };
  for (const auto& [command, description] : descriptions) {
    auto* sub = app.add_subcommand(command, description);
    sub->add_option("--config", config_path, "flat key = value config file (flags win)");
    for (std::size_t i = 0; i < kFlags.size(); ++i) {
      sub->add_option(std::string("--") + kFlags[i].name, values[i], kFlags[i].help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    rare::RunConfig config;
    if (!config_path.empty()) config = rare::load_config_file(config_path);
    for (std::size_t i = 0; i < kFlags.size(); ++i) {
      if (sub->count(std::string("--") + kFlags[i].name) > 0) {
        rare::apply_setting(config, kFlags[i].name, values[i]);
      }
    }
    spdlog::info("rare {} -> {}", command, config.out);
    rare::run(command, config, [](std::string_view msg) { spdlog::info("{}", msg); });
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", command, e.what());
    return 1;
  }
  return 0;
}
