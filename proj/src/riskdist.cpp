#include "rare/riskdist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rare {

namespace {

constexpr std::size_t kGridSize = 64;
constexpr double kMinShape = 0.1;
constexpr double kMaxShape = 10.0;
constexpr double kMinRate = 1e-4;
constexpr double kMaxRate = 10.0;
constexpr int kRefineRounds = 24;
constexpr int kMaxMovesPerRound = 10000;

// exp(-rate * z^shape)
double survival(double z, WeibullParams w) {
  if (z <= 0.0) return 1.0;
  return std::exp(-w.rate * std::pow(z, w.shape));
}

double fit_error(double log_shape, double log_rate, const RatingDistribution& target) {
  return squared_error(
      weibull_interval_probs({std::exp(log_shape), std::exp(log_rate)}), target);
}

}  // namespace

bool RatingDistribution::valid(double tol) const {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

bool WeibullParams::valid() const {
  return std::isfinite(shape) && std::isfinite(rate) && shape > 0.0 && rate > 0.0;
}

std::string_view to_string(DistributionSource source) {
  return source == DistributionSource::Empirical ? "empirical" : "weibull";
}

RatingDistribution empirical_distribution(const RatingCounts& counts) {
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw std::invalid_argument("rating counts must be non-negative");
    total += c;
  }
  if (total == 0) throw std::invalid_argument("rating counts are all zero");
  RatingDistribution d;
  for (std::size_t i = 0; i < kRatingLevels; ++i) {
    d.p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return d;
}

double weibull_pdf(double z, WeibullParams w) {
  if (z <= 0.0) return 0.0;
  const double zm = std::pow(z, w.shape);
  return w.shape * w.rate * zm / z * std::exp(-w.rate * zm);
}

double weibull_cdf(double z, WeibullParams w) {
  if (z <= 0.0) return 0.0;
  return -std::expm1(-w.rate * std::pow(z, w.shape));
}

RatingDistribution weibull_interval_probs(WeibullParams w) {
  if (!w.valid()) throw std::invalid_argument("Weibull parameters must be positive and finite");
  RatingDistribution d;
  d.p[0] = weibull_cdf(1.5, w);
  for (std::size_t i = 1; i + 1 < kRatingLevels; ++i) {
    const double lo = static_cast<double>(i) + 0.5;
    d.p[i] = survival(lo, w) - survival(lo + 1.0, w);
  }
  d.p[kRatingLevels - 1] = survival(kRatingLevels - 0.5, w);
  return d;
}

double squared_error(const RatingDistribution& a, const RatingDistribution& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kRatingLevels; ++i) {
    const double d = a.p[i] - b.p[i];
    s += d * d;
  }
  return s;
}

WeibullParams fit_weibull(const RatingDistribution& target) {
  if (!target.valid()) throw std::invalid_argument("fit target is not a distribution");
  const double lo_s = std::log(kMinShape), hi_s = std::log(kMaxShape);
  const double lo_r = std::log(kMinRate), hi_r = std::log(kMaxRate);
  const double step_s0 = (hi_s - lo_s) / (kGridSize - 1);
  const double step_r0 = (hi_r - lo_r) / (kGridSize - 1);

  double best_s = lo_s, best_r = lo_r;
  double best = fit_error(best_s, best_r, target);
  for (std::size_t i = 0; i < kGridSize; ++i) {
    const double ls = lo_s + step_s0 * static_cast<double>(i);
    for (std::size_t j = 0; j < kGridSize; ++j) {
      const double lr = lo_r + step_r0 * static_cast<double>(j);
      const double e = fit_error(ls, lr, target);
      if (e < best) {
        best = e;
        best_s = ls;
        best_r = lr;
      }
    }
  }

  // Pattern search over the 8 neighbours, confined to the grid box. Shape and
  // rate are strongly coupled, so diagonal moves matter.
  static constexpr int kMoves[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                       {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  double step_s = step_s0, step_r = step_r0;
  for (int round = 0; round < kRefineRounds; ++round) {
    step_s *= 0.5;
    step_r *= 0.5;
    bool improved = true;
    for (int it = 0; improved && it < kMaxMovesPerRound; ++it) {
      improved = false;
      for (const auto& mv : kMoves) {
        const double ls = std::clamp(best_s + mv[0] * step_s, lo_s, hi_s);
        const double lr = std::clamp(best_r + mv[1] * step_r, lo_r, hi_r);
        const double e = fit_error(ls, lr, target);
        if (e < best) {
          best = e;
          best_s = ls;
          best_r = lr;
          improved = true;
        }
      }
    }
  }
  return {std::exp(best_s), std::exp(best_r)};
}

ResolvedDistribution resolve_distribution(const RatingCounts& counts) {
  const RatingDistribution raw = empirical_distribution(counts);
  const bool complete = std::all_of(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  if (complete) return {raw, DistributionSource::Empirical};
  return {weibull_interval_probs(fit_weibull(raw)), DistributionSource::Weibull};
}

std::vector<RatingCounts> item_rating_counts(std::span<const Record> records,
                                             std::size_t num_items) {
  std::vector<RatingCounts> counts(num_items, RatingCounts{});
  for (const auto& r : records) {
    if (r.rating < kMinRating || r.rating > kMaxRating) {
      throw std::invalid_argument("rating out of range in record");
    }
    ++counts.at(r.item)[static_cast<std::size_t>(r.rating - kMinRating)];
  }
  return counts;
}

ItemSide build_item_side(const SplitDataset& split) {
  const std::size_t m = split.num_items();
  const auto counts = item_rating_counts(split.train, m);
  RatingCounts pooled{};
  for (const auto& c : counts) {
    for (std::size_t i = 0; i < kRatingLevels; ++i) pooled[i] += c[i];
  }

  ItemSide side;
  side.dists.resize(m);
  side.sources.resize(m);
  for (std::size_t v = 0; v < m; ++v) {
    const bool unseen = std::accumulate(counts[v].begin(), counts[v].end(), std::int64_t{0}) == 0;
    const auto resolved = resolve_distribution(unseen ? pooled : counts[v]);
    side.dists[v] = resolved.dist;
    side.sources[v] = resolved.source;
  }
  side.prices = item_prices(split.all);
  return side;
}

}  // namespace rare
