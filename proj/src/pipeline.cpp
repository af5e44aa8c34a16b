#include "rare/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <array>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rare/baseline.hpp"
#include "rare/checkpoint.hpp"
#include "rare/error.hpp"
#include "rare/eval.hpp"
#include "rare/format.hpp"

namespace rare {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_as(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("invalid value '" + std::string(text) + "' for " +
                                std::string(key));
  }
  return value;
}

template <typename T>
T parse_positive(std::string_view key, std::string_view text) {
  const T v = parse_as<T>(key, text);
  if (!(v > T{0})) throw std::invalid_argument(std::string(key) + " must be positive");
  return v;
}

struct Setting {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string join_cutoffs(const std::vector<std::size_t>& cutoffs) {
  std::string s;
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(cutoffs[i]);
  }
  return s;
}

const std::vector<Setting>& settings() {
  using C = RunConfig;
  using SV = std::string_view;
  static const std::vector<Setting> kSettings = {
      {"data", [](C& c, SV v) { c.data = v; }, [](const C& c) { return c.data; }},
      {"out", [](C& c, SV v) { c.out = v; }, [](const C& c) { return c.out; }},
      {"model", [](C& c, SV v) { c.model = v; }, [](const C& c) { return c.model; }},
      {"baseline",
       [](C& c, SV v) {
         if (!v.empty() && v != "bpr") throw std::invalid_argument("baseline must be 'bpr'");
         c.baseline = v;
       },
       [](const C& c) { return c.baseline; }},
      {"seed",
       [](C& c, SV v) {
         c.train.seed = parse_as<std::uint64_t>("seed", v);
         c.synth.seed = c.train.seed;
       },
       [](const C& c) { return std::to_string(c.train.seed); }},
      {"k", [](C& c, SV v) { c.train.k = parse_positive<std::size_t>("k", v); },
       [](const C& c) { return std::to_string(c.train.k); }},
      {"lr",
       [](C& c, SV v) {
         c.train.learning_rate = parse_as<double>("lr", v);
         if (c.train.learning_rate < 0) throw std::invalid_argument("lr must be >= 0");
       },
       [](const C& c) { return shortest(c.train.learning_rate); }},
      {"reg",
       [](C& c, SV v) {
         c.train.reg_weight = parse_as<double>("reg", v);
         if (c.train.reg_weight < 0) throw std::invalid_argument("reg must be >= 0");
       },
       [](const C& c) { return shortest(c.train.reg_weight); }},
      {"epochs", [](C& c, SV v) { c.train.epochs = parse_as<std::size_t>("epochs", v); },
       [](const C& c) { return std::to_string(c.train.epochs); }},
      {"negatives",
       [](C& c, SV v) { c.train.negatives_per_positive = parse_positive<std::size_t>("negatives", v); },
       [](const C& c) { return std::to_string(c.train.negatives_per_positive); }},
      {"batch-size",
       [](C& c, SV v) { c.train.batch_size = parse_positive<std::size_t>("batch-size", v); },
       [](const C& c) { return std::to_string(c.train.batch_size); }},
      {"patience",
       [](C& c, SV v) { c.train.patience_epochs = parse_positive<std::size_t>("patience", v); },
       [](const C& c) { return std::to_string(c.train.patience_epochs); }},
      {"mode", [](C& c, SV v) { c.train.mode = parse_ablation_mode(v); },
       [](const C& c) { return std::string(to_string(c.train.mode)); }},
      {"cutoffs", [](C& c, SV v) { c.cutoffs = parse_cutoffs(v); },
       [](const C& c) { return join_cutoffs(c.cutoffs); }},
      {"threads", [](C& c, SV v) { c.train.threads = parse_positive<std::size_t>("threads", v); },
       [](const C& c) { return std::to_string(c.train.threads); }},
      {"min-count", [](C& c, SV v) { c.min_count = parse_positive<std::size_t>("min-count", v); },
       [](const C& c) { return std::to_string(c.min_count); }},
      {"price-fallback",
       [](C& c, SV v) {
         if (v.empty()) {
           c.price_fallback.reset();
           return;
         }
         c.price_fallback = parse_as<double>("price-fallback", v);
         if (*c.price_fallback < 0) throw std::invalid_argument("price-fallback must be >= 0");
       },
       [](const C& c) { return c.price_fallback ? shortest(*c.price_fallback) : std::string(); }},
      {"topk", [](C& c, SV v) { c.topk = parse_positive<std::size_t>("topk", v); },
       [](const C& c) { return std::to_string(c.topk); }},
      {"user", [](C& c, SV v) { c.user = v; }, [](const C& c) { return c.user; }},
      {"synth-users",
       [](C& c, SV v) { c.synth.n_users = parse_positive<std::size_t>("synth-users", v); },
       [](const C& c) { return std::to_string(c.synth.n_users); }},
      {"synth-items",
       [](C& c, SV v) { c.synth.n_items = parse_positive<std::size_t>("synth-items", v); },
       [](const C& c) { return std::to_string(c.synth.n_items); }},
      {"synth-k", [](C& c, SV v) { c.synth.k_true = parse_positive<std::size_t>("synth-k", v); },
       [](const C& c) { return std::to_string(c.synth.k_true); }},
      {"synth-interactions",
       [](C& c, SV v) {
         c.synth.interactions_per_user = parse_positive<std::size_t>("synth-interactions", v);
       },
       [](const C& c) { return std::to_string(c.synth.interactions_per_user); }},
      {"synth-price-min",
       [](C& c, SV v) { c.synth.price_min = parse_positive<double>("synth-price-min", v); },
       [](const C& c) { return shortest(c.synth.price_min); }},
      {"synth-price-max",
       [](C& c, SV v) { c.synth.price_max = parse_positive<double>("synth-price-max", v); },
       [](const C& c) { return shortest(c.synth.price_max); }},
      {"synth-concentration",
       [](C& c, SV v) {
         c.synth.dist_concentration = parse_positive<double>("synth-concentration", v);
       },
       [](const C& c) { return shortest(c.synth.dist_concentration); }},
      {"synth-choice-set",
       [](C& c, SV v) { c.synth.choice_set_size = parse_positive<std::size_t>("synth-choice-set", v); },
       [](const C& c) { return std::to_string(c.synth.choice_set_size); }},
      {"synth-seed",
       [](C& c, SV v) { c.synth.seed = parse_as<std::uint64_t>("synth-seed", v); },
       [](const C& c) { return std::to_string(c.synth.seed); }},
  };
  return kSettings;
}

void note(const ProgressFn& progress, const std::string& message) {
  if (progress) progress(message);
}

fs::path ensure_out_dir(const RunConfig& config) {
  fs::path out(config.out);
  fs::create_directories(out);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  return f;
}

fs::path checkpoint_path(const RunConfig& config) {
  return config.model.empty() ? fs::path(config.out) / "model.ckpt" : fs::path(config.model);
}

void save_manifest(const fs::path& dir, std::string_view command, const RunConfig& config) {
  auto f = open_out(dir / "manifest.txt");
  if (command == "evaluate" || command == "recommend") {
    // Pin the checkpoint so a rerun into another directory reads the same one.
    RunConfig pinned = config;
    pinned.model = checkpoint_path(config).string();
    write_manifest(f, command, pinned);
  } else {
    write_manifest(f, command, config);
  }
}

void require_data(const RunConfig& config) {
  if (config.data.empty()) throw std::invalid_argument("--data is required");
  if (!fs::exists(config.data)) throw DataError("data file " + config.data + " does not exist");
}

// Trained model of either kind with a uniform scoring interface.
struct LoadedModel {
  std::optional<RareModel> rare;
  std::optional<BprModel> bpr;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  Scorer scorer(const ItemSide& items) const {
    if (rare) return [this, &items](std::size_t u, std::size_t v) { return rare->score(u, v, items); };
    return [this](std::size_t u, std::size_t v) { return bpr_score(*bpr, u, v); };
  }
};

LoadedModel load_model(const RunConfig& config, const SplitDataset& split) {
  const fs::path path = checkpoint_path(config);
  LoadedModel loaded;
  {
    auto f = open_in(path);
    const auto kind = peek_checkpoint_kind(f);
    f.seekg(0);
    if (kind == CheckpointKind::Rare) {
      auto ck = load_rare_checkpoint(f);
      loaded.rare = std::move(ck.model);
      loaded.user_ids = std::move(ck.user_ids);
      loaded.item_ids = std::move(ck.item_ids);
    } else {
      auto ck = load_bpr_checkpoint(f);
      loaded.bpr = std::move(ck.model);
      loaded.user_ids = std::move(ck.user_ids);
      loaded.item_ids = std::move(ck.item_ids);
    }
  }
  if (loaded.user_ids != split.all.user_ids() || loaded.item_ids != split.all.item_ids()) {
    throw DataError("checkpoint " + path.string() +
                    " was trained on a different user/item universe than --data");
  }
  return loaded;
}

void write_rare_checkpoint(const fs::path& path, const RareModel& model, const SplitDataset& split) {
  auto f = open_out(path);
  save_checkpoint(f, model, split.all.user_ids(), split.all.item_ids());
}

void write_log(const fs::path& path, std::span<const EpochLog> log) {
  auto f = open_out(path);
  write_train_log(f, log);
}

EvalOptions test_options(const RunConfig& config) {
  EvalOptions options;
  options.cutoffs = config.cutoffs;
  options.seed = mix_seed(config.train.seed, 3);
  options.target = Role::Test;
  options.threads = config.train.threads;
  return options;
}

std::string epoch_message(std::string_view tag, const EpochLog& e) {
  std::ostringstream ss;
  ss << tag << " epoch " << e.epoch << " loss " << e.train_loss << " val_ndcg@10 "
     << e.val_ndcg10;
  return ss.str();
}

void run_ingest(const RunConfig& config, const ProgressFn& progress) {
  require_data(config);
  const auto dir = ensure_out_dir(config);
  const auto prepared = prepare_data(config);
  const auto& split = prepared.split;
  {
    auto f = open_out(dir / "interactions.csv");
    write_interactions(f, split.all);
  }
  {
    auto f = open_out(dir / "split.csv");
    write_split_manifest(f, split);
  }
  nlohmann::ordered_json j;
  j["rows_parsed"] = prepared.parsed.set.size();
  j["malformed_rows"] = prepared.parsed.malformed_rows;
  j["missing_price_dropped"] = prepared.parsed.missing_price_dropped;
  j["missing_price_filled"] = prepared.parsed.missing_price_filled;
  j["duplicate_rows"] = prepared.parsed.duplicate_rows;
  j["users"] = split.num_users();
  j["items"] = split.num_items();
  j["interactions_after_filter"] = split.all.size();
  j["train_records"] = split.train.size();
  {
    auto f = open_out(dir / "ingest.json");
    f << j.dump(2) << '\n';
  }
  save_manifest(dir, "ingest", config);
  note(progress, "ingested " + std::to_string(split.all.size()) + " interactions, " +
                     std::to_string(split.num_users()) + " users, " +
                     std::to_string(split.num_items()) + " items");
}

void run_fit_dist(const RunConfig& config, const ProgressFn& progress) {
  require_data(config);
  const auto dir = ensure_out_dir(config);
  auto in = open_in(config.data);
  auto out = open_out(dir / "distributions.csv");
  fit_distributions_csv(in, out);
  save_manifest(dir, "fit-dist", config);
  note(progress, "wrote " + (dir / "distributions.csv").string());
}

void run_train(const RunConfig& config, const ProgressFn& progress) {
  require_data(config);
  const auto dir = ensure_out_dir(config);
  const auto prepared = prepare_data(config);
  if (config.baseline == "bpr") {
    const auto result = bpr_train(config.train, prepared.split, [&](const EpochLog& e) {
      note(progress, epoch_message("bpr", e));
    });
    auto f = open_out(dir / "model.ckpt");
    save_checkpoint(f, result.model, prepared.split.all.user_ids(),
                    prepared.split.all.item_ids());
    write_log(dir / "train_log.csv", result.log);
  } else {
    const auto result = train(config.train, prepared.split, prepared.items, [&](const EpochLog& e) {
      note(progress, epoch_message(to_string(config.train.mode), e));
    });
    write_rare_checkpoint(dir / "model.ckpt", result.model, prepared.split);
    write_log(dir / "train_log.csv", result.log);
  }
  save_manifest(dir, "train", config);
}

void write_eval_outputs(const fs::path& dir, const EvalReport& report,
                        const SplitDataset& split, const std::string& prefix = "") {
  {
    auto f = open_out(dir / (prefix + "metrics.csv"));
    write_metrics_csv(f, report);
  }
  {
    auto f = open_out(dir / (prefix + "summary.json"));
    write_summary_json(f, report);
  }
  auto f = open_out(dir / (prefix + "eval_negatives.csv"));
  f << "user_id,item_id\n";
  for (const auto& un : report.negatives) {
    for (std::size_t v : un.items) {
      f << split.all.user_id(un.user) << ',' << split.all.item_id(v) << '\n';
    }
  }
}

void run_evaluate(const RunConfig& config, const ProgressFn& progress) {
  require_data(config);
  const auto dir = ensure_out_dir(config);
  const auto prepared = prepare_data(config);
  const auto model = load_model(config, prepared.split);
  auto options = test_options(config);
  options.keep_negatives = true;
  const auto report = evaluate(model.scorer(prepared.items), prepared.split, options);
  write_eval_outputs(dir, report, prepared.split);
  save_manifest(dir, "evaluate", config);
  std::ostringstream ss;
  ss << "evaluated " << report.users_evaluated << " users (" << report.users_skipped
     << " skipped)";
  for (const auto& m : report.per_k) ss << " ndcg@" << m.k << "=" << m.ndcg;
  note(progress, ss.str());
}

void run_recommend(const RunConfig& config, const ProgressFn& progress) {
  require_data(config);
  const auto dir = ensure_out_dir(config);
  const auto prepared = prepare_data(config);
  const auto& split = prepared.split;
  const auto model = load_model(config, split);
  const auto scorer = model.scorer(prepared.items);

  std::vector<std::size_t> users;
  if (!config.user.empty()) {
    const auto u = split.all.find_user(config.user);
    if (!u) throw DataError("unknown user '" + config.user + "'");
    users.push_back(*u);
  } else {
    users.resize(split.num_users());
    std::iota(users.begin(), users.end(), std::size_t{0});
  }
  auto f = open_out(dir / "recommendations.csv");
  f << "user_id,rank,item_id,prospect_value\n";
  for (std::size_t u : users) {
    const auto pool = split.candidate_pool(u);
    const auto top = recommend_topk(scorer, u, pool, config.topk);
    for (std::size_t r = 0; r < top.size(); ++r) {
      f << split.all.user_id(u) << ',' << r + 1 << ',' << split.all.item_id(top[r].item) << ','
        << shortest(top[r].score) << '\n';
    }
  }
  save_manifest(dir, "recommend", config);
  note(progress, "wrote recommendations for " + std::to_string(users.size()) + " users");
}

void run_synth(const RunConfig& config, const ProgressFn& progress) {
  const auto dir = ensure_out_dir(config);
  const auto data = generate(config.synth);
  {
    auto f = open_out(dir / "interactions.csv");
    write_interactions(f, data.interactions);
  }
  {
    auto f = open_out(dir / "truth.json");
    write_truth_json(f, config.synth, data);
  }
  save_manifest(dir, "synth", config);
  note(progress, "generated " + std::to_string(data.interactions.size()) + " interactions");
}

void run_ablate(const RunConfig& config, const ProgressFn& progress) {
  require_data(config);
  const auto dir = ensure_out_dir(config);
  const auto prepared = prepare_data(config);
  struct Variant {
    std::string_view label;
    AblationMode mode;
  };
  // Row order follows the usual ablation table: variants first, full model last.
  const std::array<Variant, 4> variants = {
      Variant{"RARE-WF", AblationMode::NoWeighting},
      Variant{"RARE-VF", AblationMode::NoValuePersonalization},
      Variant{"RARE-RP", AblationMode::NoReference}, Variant{"RARE", AblationMode::Full}};

  auto table = open_out(dir / "ablation.csv");
  table << "variant";
  for (std::size_t k : config.cutoffs) table << ",F1@" << k << ",NDCG@" << k;
  table << '\n';
  for (const auto& variant : variants) {
    TrainConfig tc = config.train;
    tc.mode = variant.mode;
    const auto result = train(tc, prepared.split, prepared.items, [&](const EpochLog& e) {
      note(progress, epoch_message(variant.label, e));
    });
    const std::string tag(to_string(variant.mode));
    write_rare_checkpoint(dir / (tag + ".ckpt"), result.model, prepared.split);
    write_log(dir / (tag + "_train_log.csv"), result.log);
    const auto report = evaluate(
        [&](std::size_t u, std::size_t v) { return result.model.score(u, v, prepared.items); },
        prepared.split, test_options(config));
    write_eval_outputs(dir, report, prepared.split, tag + "_");
    table << variant.label;
    for (const auto& m : report.per_k) table << ',' << shortest(m.f1) << ',' << shortest(m.ndcg);
    table << '\n';
  }
  save_manifest(dir, "ablate", config);
  note(progress, "wrote " + (dir / "ablation.csv").string());
}

}  // namespace

std::vector<std::size_t> parse_cutoffs(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = std::min(text.find(',', start), text.size());
    const auto token = trim(text.substr(start, pos - start));
    if (!token.empty()) out.push_back(parse_positive<std::size_t>("cutoffs", token));
    start = pos + 1;
  }
  if (out.empty()) throw std::invalid_argument("cutoffs list is empty");
  return out;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& s : settings()) {
    if (s.key == key) {
      s.set(config, trim(value));
      return;
    }
  }
  throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
}

void load_config(std::istream& in, RunConfig& config) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = std::string_view(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key == "command" || key == "version") continue;
    apply_setting(config, key, value);
  }
}

RunConfig load_config_file(const fs::path& path) {
  auto f = open_in(path);
  RunConfig config;
  load_config(f, config);
  return config;
}

void write_manifest(std::ostream& out, std::string_view command, const RunConfig& config) {
  out << "# rare run manifest; rerun with: rare " << command << " --config <this file>\n";
  out << "command = " << command << '\n';
  out << "version = " << kVersion << '\n';
  for (const auto& s : settings()) out << s.key << " = " << s.get(config) << '\n';
}

PreparedData prepare_data(const RunConfig& config) {
  require_data(config);
  PreparedData prepared;
  {
    auto f = open_in(config.data);
    prepared.parsed = parse_interactions(f, CsvSchema{}, config.price_fallback);
  }
  const auto filtered = filter_min_activity(prepared.parsed.set, config.min_count);
  prepared.split = chrono_split(filtered);
  prepared.items = build_item_side(prepared.split);
  return prepared;
}

void run(std::string_view command, const RunConfig& config, const ProgressFn& progress) {
  if (command == "ingest") return run_ingest(config, progress);
  if (command == "fit-dist") return run_fit_dist(config, progress);
  if (command == "train") return run_train(config, progress);
  if (command == "evaluate") return run_evaluate(config, progress);
  if (command == "recommend") return run_recommend(config, progress);
  if (command == "synth") return run_synth(config, progress);
  if (command == "ablate") return run_ablate(config, progress);
  throw std::invalid_argument("unknown command '" + std::string(command) + "'");
}

void fit_distributions_csv(std::istream& in, std::ostream& out) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("counts file is empty");
  out << "item_id,p1,p2,p3,p4,p5,source\n";
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const auto pos = rest.find(',');
      fields.push_back(trim(rest.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() != 1 + kRatingLevels) {
      throw DataError("counts line " + std::to_string(lineno) + ": expected 6 fields");
    }
    RatingCounts counts{};
    for (std::size_t i = 0; i < kRatingLevels; ++i) {
      counts[i] = parse_as<std::int64_t>("count", fields[i + 1]);
    }
    const auto resolved = resolve_distribution(counts);
    out << fields[0];
    for (double p : resolved.dist.p) out << ',' << shortest(p);
    out << ',' << to_string(resolved.source) << '\n';
  }
}

}  // namespace rare
