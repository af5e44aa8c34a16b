#pragma once

// Leave-one-out ranking evaluation: each user's held-out item is ranked
// against sampled negatives and scored with F1@K and NDCG@K.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rare/data.hpp"
#include "rare/model.hpp"
#include "rare/riskdist.hpp"

namespace rare {

/// Single relevant item: 1/log2(rank+1) when rank <= k, else 0.
double ndcg_at_k(std::size_t rank, std::size_t k);

/// Single relevant item: 2/(k+1) when rank <= k, else 0.
double f1_at_k(std::size_t rank, std::size_t k);

using Scorer = std::function<double(std::size_t user, std::size_t item)>;

struct MetricAtK {
  std::size_t k = 0;
  double f1 = 0.0;
  double ndcg = 0.0;
};

struct UserNegatives {
  std::size_t user = 0;
  std::vector<std::size_t> items;
};

struct EvalReport {
  std::vector<MetricAtK> per_k;
  std::size_t users_evaluated = 0;
  std::size_t users_skipped = 0;
  std::uint64_t seed = 0;
  /// Filled only when EvalOptions::keep_negatives is set.
  std::vector<UserNegatives> negatives;

  const MetricAtK& at(std::size_t k) const;
};

struct EvalOptions {
  std::vector<std::size_t> cutoffs{5, 10, 20, 50};
  std::uint64_t seed = 2024;
  std::size_t num_negatives = 100;
  Role target = Role::Test;
  std::size_t threads = 1;
  bool keep_negatives = false;
};

/// 1-based rank of `positive` among `positive` + `negatives` by descending
/// score; ties go to the lower item index.
std::size_t rank_of_positive(std::size_t positive, double positive_score,
                             std::span<const std::size_t> negatives,
                             std::span<const double> negative_scores);

/// Per user: sample negatives with a stream derived from (seed, user), rank
/// the held-out item against them and average metrics over users. Users
/// with too small a candidate pool are skipped and counted.
EvalReport evaluate(const Scorer& scorer, const SplitDataset& split, const EvalOptions& options);

struct ScoredItem {
  std::size_t item = 0;
  double score = 0.0;
};

/// Candidates sorted by descending score (ties: lower index first), first k.
std::vector<ScoredItem> recommend_topk(const Scorer& scorer, std::size_t user,
                                       std::span<const std::size_t> candidates, std::size_t k);

std::vector<ScoredItem> recommend_topk(const RareModel& model, std::size_t user,
                                       std::span<const std::size_t> candidates,
                                       const ItemSide& items, std::size_t k);

/// `metric,k,value` rows for f1 and ndcg at each cutoff.
void write_metrics_csv(std::ostream& out, const EvalReport& report);
void write_summary_json(std::ostream& out, const EvalReport& report);

}  // namespace rare
