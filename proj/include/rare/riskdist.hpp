#pragma once

// Per-item rating (risk) distributions: empirical frequencies, or a
// Weibull fit integrated over the rating intervals when some level was
// never observed.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rare/data.hpp"

namespace rare {

inline constexpr std::size_t kRatingLevels = 5;

using RatingCounts = std::array<std::int64_t, kRatingLevels>;

/// Probabilities of the rating states 1..5 (p[0] is rating 1).
struct RatingDistribution {
  std::array<double, kRatingLevels> p{};

  /// Entries in [0,1] and summing to one within `tol`.
  bool valid(double tol = 1e-9) const;
  double operator[](std::size_t i) const { return p[i]; }
  bool operator==(const RatingDistribution&) const = default;
};

/// f(z) = shape * rate * z^(shape-1) * exp(-rate * z^shape), z >= 0.
struct WeibullParams {
  double shape = 1.0;
  double rate = 1.0;

  bool valid() const;
  bool operator==(const WeibullParams&) const = default;
};

enum class DistributionSource { Empirical, Weibull };

std::string_view to_string(DistributionSource source);

struct ResolvedDistribution {
  RatingDistribution dist;
  DistributionSource source = DistributionSource::Empirical;
};

RatingDistribution empirical_distribution(const RatingCounts& counts);

double weibull_pdf(double z, WeibullParams params);
double weibull_cdf(double z, WeibullParams params);

/// Interval masses [0,1.5), [1.5,2.5), ..., [4.5,inf) of the Weibull law.
RatingDistribution weibull_interval_probs(WeibullParams params);

double squared_error(const RatingDistribution& a, const RatingDistribution& b);

/// Least-squares Weibull fit to a five-level target. A 64x64 grid over
/// log(shape) in [log 0.1, log 10] and log(rate) in [log 1e-4, log 10] picks
/// the start; pattern search with a halving step refines it. Deterministic.
WeibullParams fit_weibull(const RatingDistribution& target);

/// Empirical distribution when all five counts are positive, otherwise the
/// interval probabilities of the fitted Weibull.
ResolvedDistribution resolve_distribution(const RatingCounts& counts);

/// Rating histograms of each item over `records`.
std::vector<RatingCounts> item_rating_counts(std::span<const Record> records,
                                             std::size_t num_items);

/// Everything item-side the prospect model consumes: risk distribution and
/// price of each dense item index.
struct ItemSide {
  std::vector<RatingDistribution> dists;
  std::vector<DistributionSource> sources;
  std::vector<double> prices;

  std::size_t size() const { return dists.size(); }
};

/// Distributions from TRAIN ratings only; prices are the mean observed price
/// of each item. Items without any train rating fall back to the pooled
/// train histogram.
ItemSide build_item_side(const SplitDataset& split);

}  // namespace rare
