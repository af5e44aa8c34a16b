#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "fixtures.hpp"
#include "rare/checkpoint.hpp"
#include "rare/error.hpp"

using namespace rare;

TEST(Checkpoint, RareRoundTripIsBitExact) {
  for (auto mode : fixture::kAllModes) {
    auto t = fixture::tiny_problem(3, 4, 2, mode, 21);
    t.model.params()[PtParam::Beta].user_bias[0] = 0.1 + 0.2;
    t.model.params()[PtParam::Gamma].item_bias[1] = -1e-310;
    t.model.params().reference[2] = 3.0000000000000004;
    std::stringstream buf;
    save_checkpoint(buf, t.model, {"a", "b", "c"}, {"w", "x", "y", "z"});
    const auto loaded = load_rare_checkpoint(buf);
    EXPECT_EQ(loaded.model, t.model);
    EXPECT_EQ(loaded.user_ids, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(loaded.item_ids.size(), 4u);
    const auto a = t.model.params().flatten(), b = loaded.model.params().flatten();
    EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
  }
}

TEST(Checkpoint, BprRoundTripIsBitExact) {
  auto model = BprModel::initialized(5, 7, 3, 4);
  model.item_bias[3] = 1.0 / 3.0;
  std::stringstream buf;
  save_checkpoint(buf, model);
  EXPECT_EQ(peek_checkpoint_kind(buf), CheckpointKind::Bpr);
  buf.seekg(0);
  EXPECT_EQ(load_bpr_checkpoint(buf).model, model);
}

TEST(Checkpoint, KindIsDetected) {
  std::stringstream buf;
  save_checkpoint(buf, RareModel(1, 1, 1, AblationMode::Full));
  EXPECT_EQ(peek_checkpoint_kind(buf), CheckpointKind::Rare);
}

TEST(Checkpoint, TruncatedInputRejected) {
  std::stringstream buf;
  save_checkpoint(buf, RareModel(2, 2, 1, AblationMode::Full));
  const std::string text = buf.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(load_rare_checkpoint(cut), FormatError);
}

TEST(Checkpoint, WrongMagicRejected) {
  std::istringstream in("something else\n");
  EXPECT_THROW(load_rare_checkpoint(in), FormatError);
  std::istringstream again("something else\n");
  EXPECT_THROW(peek_checkpoint_kind(again), FormatError);
}
