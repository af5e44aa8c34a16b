#pragma once

// Synthetic populations of prospect-theoretic consumers with known
// parameters, for parameter-recovery and method-comparison studies.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "rare/data.hpp"
#include "rare/model.hpp"
#include "rare/riskdist.hpp"

namespace rare {

struct SynthSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 300;
  std::size_t k_true = 2;
  double price_min = 1.0;
  double price_max = 10.0;
  /// Rating distributions are Dirichlet(1) draws raised to this power and
  /// renormalized; larger values give more peaked distributions.
  double dist_concentration = 1.0;
  std::size_t interactions_per_user = 30;
  /// Items offered per choice (the chosen one plus distractors).
  std::size_t choice_set_size = 3;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// True model in FULL mode (per-pair parameters via prospect_params, per-user
/// reference points) plus the true item distributions and prices.
struct SynthTruth {
  RareModel model;
  ItemSide items;

  double prospect_value(std::size_t u, std::size_t v) const { return model.score(u, v, items); }
};

struct SynthData {
  InteractionSet interactions;  // ids u<i>, i<j>; dense indices match truth
  SynthTruth truth;
};

RatingDistribution draw_rating_distribution(double concentration, Rng& rng);

/// Each interaction: `choice_set_size` distinct items the user has not
/// chosen before are offered, one is picked with MNL probability of the
/// true prospect values, and its rating is drawn from the item's true
/// distribution. Timestamps increase by one per interaction.
SynthData generate(const SynthSpec& spec);

/// Pick one index of `values` with probability mnl_probability(values).
std::size_t sample_choice(std::span<const double> values, Rng& rng);

/// Spearman rank correlation with average ranks for ties. Zero-variance
/// input yields 0 and sets `degenerate`.
double spearman(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);

struct RecoveryReport {
  double value_correlation = 0.0;
  bool value_degenerate = false;
  double reference_correlation = 0.0;
  bool reference_degenerate = false;
  std::size_t probes = 0;
};

/// Spearman correlation between true and learned prospect values over the
/// probe pairs (both scored on the true item side), and between true and
/// learned reference points over users. Requires at least 10 probes.
RecoveryReport recovery_report(const RareModel& trained, const SynthTruth& truth,
                               std::span<const std::pair<std::size_t, std::size_t>> probes);

/// Ground-truth JSON: spec, references, factorized tables, item
/// distributions and prices keyed by id.
void write_truth_json(std::ostream& out, const SynthSpec& spec, const SynthData& data);

}  // namespace rare
