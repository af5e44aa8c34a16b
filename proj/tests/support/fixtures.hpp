#pragma once
// Small randomized problems for gradient and property checks.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "rare/model.hpp"
#include "rare/rng.hpp"
#include "rare/synthgen.hpp"

namespace rare::fixture {

struct TinyProblem {
  RareModel model;
  ItemSide items;
  std::vector<ChoiceExample> batch;
};

/// Random raw parameters, strictly positive item distributions and a batch
/// with one example per (user, item) pair against two other items.
/// References avoid integers so no outcome sits on the value-function kink.
inline TinyProblem tiny_problem(std::size_t n, std::size_t m, std::size_t k, AblationMode mode,
                                std::uint64_t seed) {
  Rng rng = make_rng(seed, 77);
  TinyProblem t;
  t.model = RareModel(n, m, k, mode);
  std::normal_distribution<double> raw(0.0, 0.7);
  auto& params = t.model.params();
  for (auto& table : params.theta) {
    table.global_bias = raw(rng);
    for (auto& x : table.user_bias) x = raw(rng);
    for (auto& x : table.item_bias) x = raw(rng);
    for (auto& x : table.user_factors.data()) x = raw(rng);
    for (auto& x : table.item_factors.data()) x = raw(rng);
  }
  std::uniform_real_distribution<double> ref(1.2, 4.8);
  for (auto& r : params.reference) {
    do {
      r = ref(rng);
    } while (std::abs(r - std::round(r)) < 0.1);
  }
  std::uniform_real_distribution<double> price(1.0, 5.0);
  for (std::size_t v = 0; v < m; ++v) {
    auto d = draw_rating_distribution(0.5, rng);
    for (auto& p : d.p) p = 0.9 * p + 0.02;
    t.items.dists.push_back(d);
    t.items.sources.push_back(DistributionSource::Empirical);
    t.items.prices.push_back(price(rng));
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      t.batch.push_back({u, v, {(v + 1) % m, (v + 2) % m}});
    }
  }
  return t;
}

/// Maximum of |a - b| / max(|a|, |b|) over entries where either side
/// exceeds `floor` in magnitude.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale <= floor) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline constexpr AblationMode kAllModes[] = {AblationMode::Full,
                                              AblationMode::NoValuePersonalization,
                                              AblationMode::NoWeighting,
                                              AblationMode::NoReference};

}  // namespace rare::fixture
