#include "rare/eval.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rare/error.hpp"
#include "rare/format.hpp"
#include "rare/rng.hpp"

namespace rare {

double ndcg_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0 || k == 0) throw std::invalid_argument("rank and k are 1-based");
  if (rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double f1_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0 || k == 0) throw std::invalid_argument("rank and k are 1-based");
  if (rank > k) return 0.0;
  // precision 1/k, recall 1
  return 2.0 / (static_cast<double>(k) + 1.0);
}

const MetricAtK& EvalReport::at(std::size_t k) const {
  for (const auto& m : per_k) {
    if (m.k == k) return m;
  }
  throw std::out_of_range("no metrics recorded at k=" + std::to_string(k));
}

std::size_t rank_of_positive(std::size_t positive, double positive_score,
                             std::span<const std::size_t> negatives,
                             std::span<const double> negative_scores) {
  std::size_t rank = 1;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const double s = negative_scores[i];
    if (s > positive_score || (s == positive_score && negatives[i] < positive)) ++rank;
  }
  return rank;
}

namespace {

struct UserOutcome {
  bool skipped = true;
  std::size_t rank = 0;
  std::vector<std::size_t> negatives;
};

UserOutcome evaluate_user(const Scorer& scorer, const SplitDataset& split,
                          const EvalOptions& options, std::size_t u) {
  UserOutcome out;
  if (split.candidate_pool_size(u) < options.num_negatives) return out;
  Rng rng = make_rng(options.seed, u);
  out.negatives = sample_negatives(split, u, options.num_negatives, rng);
  const std::size_t positive = split.held_out(options.target, u).item;
  std::vector<double> scores;
  scores.reserve(out.negatives.size());
  for (std::size_t v : out.negatives) scores.push_back(scorer(u, v));
  out.rank = rank_of_positive(positive, scorer(u, positive), out.negatives, scores);
  out.skipped = false;
  return out;
}

}  // namespace

EvalReport evaluate(const Scorer& scorer, const SplitDataset& split, const EvalOptions& options) {
  if (options.target == Role::Train) throw std::invalid_argument("evaluate targets val or test");
  if (options.cutoffs.empty()) throw std::invalid_argument("no cutoffs given");
  const std::size_t n = split.num_users();
  std::vector<UserOutcome> outcomes(n);

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n));
  if (threads == 1) {
    for (std::size_t u = 0; u < n; ++u) outcomes[u] = evaluate_user(scorer, split, options, u);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          for (std::size_t u = t; u < n; u += threads) {
            outcomes[u] = evaluate_user(scorer, split, options, u);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport report;
  report.seed = options.seed;
  for (std::size_t k : options.cutoffs) report.per_k.push_back(MetricAtK{k, 0.0, 0.0});
  for (std::size_t u = 0; u < n; ++u) {
    auto& o = outcomes[u];
    if (o.skipped) {
      ++report.users_skipped;
      continue;
    }
    ++report.users_evaluated;
    for (auto& m : report.per_k) {
      m.f1 += f1_at_k(o.rank, m.k);
      m.ndcg += ndcg_at_k(o.rank, m.k);
    }
    if (options.keep_negatives) report.negatives.push_back({u, std::move(o.negatives)});
  }
  if (report.users_evaluated > 0) {
    const double denom = static_cast<double>(report.users_evaluated);
    for (auto& m : report.per_k) {
      m.f1 /= denom;
      m.ndcg /= denom;
    }
  }
  return report;
}

std::vector<ScoredItem> recommend_topk(const Scorer& scorer, std::size_t user,
                                       std::span<const std::size_t> candidates, std::size_t k) {
  std::vector<ScoredItem> scored;
  scored.reserve(candidates.size());
  for (std::size_t v : candidates) scored.push_back({v, scorer(user, v)});
  const auto before = [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), before);
  scored.resize(keep);
  return scored;
}

std::vector<ScoredItem> recommend_topk(const RareModel& model, std::size_t user,
                                       std::span<const std::size_t> candidates,
                                       const ItemSide& items, std::size_t k) {
  return recommend_topk(
      [&](std::size_t u, std::size_t v) { return model.score(u, v, items); }, user, candidates,
      k);
}

void write_metrics_csv(std::ostream& out, const EvalReport& report) {
  out << "metric,k,value\n";
  for (const auto& m : report.per_k) out << "f1," << m.k << ',' << shortest(m.f1) << '\n';
  for (const auto& m : report.per_k) out << "ndcg," << m.k << ',' << shortest(m.ndcg) << '\n';
}

void write_summary_json(std::ostream& out, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["users_evaluated"] = report.users_evaluated;
  j["users_skipped"] = report.users_skipped;
  j["seed"] = report.seed;
  auto& metrics = j["metrics"];
  metrics = nlohmann::ordered_json::array();
  for (const auto& m : report.per_k) {
    metrics.push_back({{"k", m.k}, {"f1", m.f1}, {"ndcg", m.ndcg}});
  }
  out << j.dump(2) << '\n';
}

}  // namespace rare
