#pragma once

// BPR-MF: pairwise matrix factorization baseline trained on the same
// splits and negative sampler as the prospect model.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rare/data.hpp"
#include "rare/matrix.hpp"
#include "rare/model.hpp"

namespace rare {

struct BprModel {
  Matrix user_factors;
  Matrix item_factors;
  std::vector<double> item_bias;

  BprModel() = default;
  BprModel(std::size_t num_users, std::size_t num_items, std::size_t k);

  /// Factors ~ N(0, 0.1^2), zero biases.
  static BprModel initialized(std::size_t num_users, std::size_t num_items, std::size_t k,
                              std::uint64_t seed);

  std::size_t num_users() const { return user_factors.rows(); }
  std::size_t num_items() const { return item_factors.rows(); }
  std::size_t k() const { return user_factors.cols(); }

  bool operator==(const BprModel&) const = default;
};

/// p_u . q_v + l_v
double bpr_score(const BprModel& model, std::size_t u, std::size_t v);

/// -log sigmoid(positive - negative)
double bpr_pair_loss(double positive_score, double negative_score);

struct BprTrainResult {
  BprModel model;  // best validation snapshot
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_ndcg10 = 0.0;
};

/// Per-example SGD, one fresh negative per positive each epoch, L2 weight
/// config.reg_weight on the touched parameters. Uses the same early
/// stopping rule as train(); config.negatives_per_positive and mode are
/// ignored.
BprTrainResult bpr_train(const TrainConfig& config, const SplitDataset& split,
                         const EpochCallback& on_epoch = {});

}  // namespace rare
