#include "rare/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rare/error.hpp"
#include "rare/eval.hpp"
#include "rare/rng.hpp"

namespace rare {

BprModel::BprModel(std::size_t num_users, std::size_t num_items, std::size_t k)
    : user_factors(num_users, k), item_factors(num_items, k), item_bias(num_items, 0.0) {}

BprModel BprModel::initialized(std::size_t num_users, std::size_t num_items, std::size_t k,
                               std::uint64_t seed) {
  BprModel model(num_users, num_items, k);
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> init(0.0, 0.1);
  for (auto& x : model.user_factors.data()) x = init(rng);
  for (auto& x : model.item_factors.data()) x = init(rng);
  return model;
}

double bpr_score(const BprModel& model, std::size_t u, std::size_t v) {
  return dot(model.user_factors.row(u), model.item_factors.row(v)) + model.item_bias[v];
}

double bpr_pair_loss(double positive_score, double negative_score) {
  const double diff = positive_score - negative_score;
  // log(1 + exp(-diff)) without overflow
  return diff > 0.0 ? std::log1p(std::exp(-diff)) : -diff + std::log1p(std::exp(diff));
}

BprTrainResult bpr_train(const TrainConfig& config, const SplitDataset& split,
                         const EpochCallback& on_epoch) {
  if (split.train.empty()) throw DataError("training split is empty");
  const std::size_t k = config.k;
  BprModel model = BprModel::initialized(split.num_users(), split.num_items(), k, config.seed);
  Rng rng = make_rng(config.seed, 1);
  const double lr = config.learning_rate;
  const double reg2 = 2.0 * config.reg_weight;

  EvalOptions val_options;
  val_options.cutoffs = {10};
  val_options.seed = mix_seed(config.seed, 2);
  val_options.num_negatives = config.eval_negatives;
  val_options.target = Role::Validation;
  val_options.threads = config.threads;

  BprTrainResult result;
  result.model = model;
  result.best_val_ndcg10 = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> pu_old(k);
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      const Record& r = split.train[idx];
      const std::size_t u = r.user, pos = r.item;
      const std::size_t neg = sample_negatives(split, u, 1, rng).front();
      const double sp = bpr_score(model, u, pos);
      const double sn = bpr_score(model, u, neg);
      total += bpr_pair_loss(sp, sn);
      if (lr == 0.0) continue;
      // d(-log sigmoid(diff)) / d diff = -sigmoid(-diff)
      const double g = sigmoid(-(sp - sn));
      auto pu = model.user_factors.row(u);
      auto qp = model.item_factors.row(pos);
      auto qn = model.item_factors.row(neg);
      std::copy(pu.begin(), pu.end(), pu_old.begin());
      for (std::size_t f = 0; f < k; ++f) {
        pu[f] += lr * (g * (qp[f] - qn[f]) - reg2 * pu[f]);
        qp[f] += lr * (g * pu_old[f] - reg2 * qp[f]);
        qn[f] += lr * (-g * pu_old[f] - reg2 * qn[f]);
      }
      model.item_bias[pos] += lr * (g - reg2 * model.item_bias[pos]);
      model.item_bias[neg] += lr * (-g - reg2 * model.item_bias[neg]);
    }
    if (!std::isfinite(total)) {
      throw DivergenceError("BPR loss became non-finite in epoch " + std::to_string(epoch));
    }

    const auto report = evaluate(
        [&](std::size_t u, std::size_t v) { return bpr_score(model, u, v); }, split, val_options);
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = total / static_cast<double>(order.size());
    entry.val_ndcg10 = report.at(10).ndcg;
    entry.elapsed_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.val_ndcg10 > result.best_val_ndcg10) {
      result.best_val_ndcg10 = entry.val_ndcg10;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience_epochs) {
      break;
    }
  }
  if (result.log.empty()) result.best_val_ndcg10 = 0.0;
  return result;
}

}  // namespace rare
