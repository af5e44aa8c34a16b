#pragma once

// Line-oriented text checkpoints. Doubles are written as hexadecimal
// floating point so a save/load cycle is bit-exact.
//
//   rare-checkpoint 1
//   dims <n> <m> <k> <mode>
//   reference <n values>
//   alpha.global <value>
//   alpha.user_bias <n values>
//   ... item_bias, user_factors (row-major), item_factors, then beta..delta
//   user_ids <n>      one id per following line
//   item_ids <m>
//   end

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rare/baseline.hpp"
#include "rare/model.hpp"

namespace rare {

struct RareCheckpoint {
  RareModel model;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

struct BprCheckpoint {
  BprModel model;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

enum class CheckpointKind { Rare, Bpr };

void save_checkpoint(std::ostream& out, const RareModel& model,
                     const std::vector<std::string>& user_ids = {},
                     const std::vector<std::string>& item_ids = {});
void save_checkpoint(std::ostream& out, const BprModel& model,
                     const std::vector<std::string>& user_ids = {},
                     const std::vector<std::string>& item_ids = {});

/// Throws FormatError on malformed input.
RareCheckpoint load_rare_checkpoint(std::istream& in);
BprCheckpoint load_bpr_checkpoint(std::istream& in);

/// Reads only the magic line.
CheckpointKind peek_checkpoint_kind(std::istream& in);

}  // namespace rare
