#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rare/error.hpp"
#include "rare/pipeline.hpp"

using namespace rare;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(RARE_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c;
  c.synth.n_users = 30;
  c.synth.n_items = 160;
  c.synth.interactions_per_user = 12;
  c.min_count = 1;
  c.train.k = 2;
  c.train.epochs = 2;
  c.cutoffs = {5, 10};
  c.out = (dir / "synth").string();
  c.data = (dir / "synth" / "interactions.csv").string();
  return c;
}

}  // namespace

TEST(Config, SettingsApply) {
  RunConfig c;
  apply_setting(c, "seed", "17");
  apply_setting(c, "lr", "0.005");
  apply_setting(c, "mode", "no-wf");
  apply_setting(c, "cutoffs", "5, 10,20");
  apply_setting(c, "price-fallback", "1");
  EXPECT_EQ(c.train.seed, 17u);
  EXPECT_EQ(c.synth.seed, 17u);
  EXPECT_EQ(c.train.learning_rate, 0.005);
  EXPECT_EQ(c.train.mode, AblationMode::NoWeighting);
  EXPECT_EQ(c.cutoffs, (std::vector<std::size_t>{5, 10, 20}));
  EXPECT_EQ(c.price_fallback, 1.0);
}

TEST(Config, BadSettingsRejected) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "colour", "red"), std::invalid_argument);
  EXPECT_THROW(apply_setting(c, "k", "0"), std::invalid_argument);
  EXPECT_THROW(apply_setting(c, "lr", "-1"), std::invalid_argument);
  EXPECT_THROW(apply_setting(c, "mode", "partial"), std::invalid_argument);
  EXPECT_THROW(apply_setting(c, "epochs", "many"), std::invalid_argument);
  EXPECT_THROW(apply_setting(c, "baseline", "ncf"), std::invalid_argument);
  EXPECT_THROW(parse_cutoffs(" , "), std::invalid_argument);
}

TEST(Config, CommentsAndBlankLines) {
  std::istringstream in("# header\n\nk = 4   # inline\ncommand = train\nversion = 9\n");
  RunConfig c;
  load_config(in, c);
  EXPECT_EQ(c.train.k, 4u);
  std::istringstream bad("k 4\n");
  EXPECT_THROW(load_config(bad, c), std::invalid_argument);
}

TEST(Config, ManifestRoundTrips) {
  RunConfig c;
  apply_setting(c, "reg", "0.1");
  apply_setting(c, "lr", "0.1");
  apply_setting(c, "user", "u3");
  apply_setting(c, "synth-price-max", "12.5");
  std::ostringstream first;
  write_manifest(first, "train", c);
  RunConfig back;
  std::istringstream in(first.str());
  load_config(in, back);
  std::ostringstream second;
  write_manifest(second, "train", back);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_NE(first.str().find("command = train"), std::string::npos);
  EXPECT_NE(first.str().find("version = 0.1.0"), std::string::npos);
}

TEST(FitDist, ResolvesEachRow) {
  std::istringstream in("item_id,c1,c2,c3,c4,c5\na,3,4,5,6,7\nb,0,1,1,1,1\n");
  std::ostringstream out;
  fit_distributions_csv(in, out);
  const auto text = out.str();
  EXPECT_EQ(text.rfind("item_id,p1,p2,p3,p4,p5,source\n", 0), 0u);
  EXPECT_NE(text.find("a,0.12,0.16,0.2,0.24,0.28,empirical\n"), std::string::npos);
  EXPECT_NE(text.find(",weibull\n"), std::string::npos);
}

TEST(Pipeline, UnknownCommandAndMissingData) {
  RunConfig c;
  EXPECT_THROW(run("bogus", c), std::invalid_argument);
  c.data = "/nonexistent/file.csv";
  EXPECT_THROW(run("train", c), DataError);
}

TEST(Pipeline, SynthTrainEvaluateRecommend) {
  const auto dir = scratch("pipeline_chain");
  auto c = small_config(dir);
  run("synth", c);
  EXPECT_TRUE(fs::exists(dir / "synth" / "truth.json"));

  c.out = (dir / "run").string();
  run("ingest", c);
  run("train", c);
  run("evaluate", c);
  for (const char* f : {"interactions.csv", "split.csv", "ingest.json", "model.ckpt",
                        "train_log.csv", "metrics.csv", "summary.json", "eval_negatives.csv",
                        "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "run" / "metrics.csv").rfind("metric,k,value\nf1,5,", 0), 0u);

  c.user = "u4";
  c.topk = 3;
  run("recommend", c);
  const auto recs = slurp(dir / "run" / "recommendations.csv");
  EXPECT_EQ(std::count(recs.begin(), recs.end(), '\n'), 4);
  EXPECT_EQ(recs.rfind("user_id,rank,item_id,prospect_value\nu4,1,", 0), 0u);
}

TEST(Pipeline, EvaluateRerunFromManifestIsByteIdentical) {
  const auto dir = scratch("pipeline_manifest");
  auto c = small_config(dir);
  run("synth", c);
  c.out = (dir / "a").string();
  run("train", c);
  run("evaluate", c);
  const auto first = slurp(dir / "a" / "metrics.csv");
  auto again = load_config_file(dir / "a" / "manifest.txt");
  again.out = (dir / "b").string();
  run("train", again);
  run("evaluate", again);
  EXPECT_EQ(slurp(dir / "b" / "metrics.csv"), first);
  EXPECT_EQ(slurp(dir / "b" / "model.ckpt"), slurp(dir / "a" / "model.ckpt"));
}

TEST(Pipeline, BaselineTrainsAndEvaluates) {
  const auto dir = scratch("pipeline_bpr");
  auto c = small_config(dir);
  run("synth", c);
  c.out = (dir / "bpr").string();
  c.baseline = "bpr";
  run("train", c);
  EXPECT_EQ(slurp(dir / "bpr" / "model.ckpt").rfind("bpr-checkpoint 1\n", 0), 0u);
  run("evaluate", c);
  EXPECT_TRUE(fs::exists(dir / "bpr" / "metrics.csv"));
}

TEST(Pipeline, CheckpointFromOtherDataRejected) {
  const auto dir = scratch("pipeline_mismatch");
  auto c = small_config(dir);
  run("synth", c);
  c.out = (dir / "m").string();
  run("train", c);
  auto other = small_config(dir);
  other.synth.n_users = 31;
  other.out = (dir / "other").string();
  run("synth", other);
  c.data = (dir / "other" / "interactions.csv").string();
  EXPECT_THROW(run("evaluate", c), DataError);
}

TEST(Pipeline, AblateWritesTableRows) {
  const auto dir = scratch("pipeline_ablate");
  auto c = small_config(dir);
  run("synth", c);
  c.out = (dir / "ab").string();
  c.train.epochs = 1;
  run("ablate", c);
  std::istringstream table(slurp(dir / "ab" / "ablation.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(table, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "variant,F1@5,NDCG@5,F1@10,NDCG@10");
  EXPECT_EQ(lines[1].rfind("RARE-WF,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("RARE-VF,", 0), 0u);
  EXPECT_EQ(lines[3].rfind("RARE-RP,", 0), 0u);
  EXPECT_EQ(lines[4].rfind("RARE,", 0), 0u);
}

TEST(Config, SynthSeedSurvivesManifest) {
  RunConfig c;
  apply_setting(c, "seed", "42");
  apply_setting(c, "synth-seed", "7");
  std::ostringstream out;
  write_manifest(out, "synth", c);
  RunConfig back;
  std::istringstream in(out.str());
  load_config(in, back);
  EXPECT_EQ(back.train.seed, 42u);
  EXPECT_EQ(back.synth.seed, 7u);
}

TEST(Pipeline, EvaluateManifestPinsCheckpoint) {
  const auto dir = scratch("pipeline_pin");
  auto c = small_config(dir);
  run("synth", c);
  c.out = (dir / "a").string();
  run("train", c);
  run("evaluate", c);
  auto again = load_config_file(dir / "a" / "manifest.txt");
  EXPECT_EQ(again.model, (dir / "a" / "model.ckpt").string());
  again.out = (dir / "elsewhere").string();
  run("evaluate", again);
  EXPECT_EQ(slurp(dir / "elsewhere" / "metrics.csv"), slurp(dir / "a" / "metrics.csv"));
}
