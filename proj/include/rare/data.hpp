#pragma once

// Transaction ingestion, activity filtering, chronological leave-one-out
// splitting and negative sampling.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rare/rng.hpp"

namespace rare {

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;

/// One purchase as it appears in the source log.
struct Interaction {
  std::string user_id;
  std::string item_id;
  int rating = 0;
  std::int64_t timestamp = 0;
  double price = 0.0;

  bool operator==(const Interaction&) const = default;
};

/// An interaction with ids replaced by dense indices.
struct Record {
  std::size_t user = 0;
  std::size_t item = 0;
  int rating = 0;
  std::int64_t timestamp = 0;
  double price = 0.0;

  bool operator==(const Record&) const = default;
};

/// Ordered interactions plus the id <-> dense index maps for users and items.
///
/// Ids are interned in first-seen order. Records repeating an existing
/// (user, item, timestamp) triple are ignored by add().
class InteractionSet {
 public:
  std::size_t intern_user(std::string_view id);
  std::size_t intern_item(std::string_view id);

  /// Returns false when the record duplicates an existing (u, v, t) triple.
  bool add(const Interaction& interaction);

  static InteractionSet from_interactions(const std::vector<Interaction>& rows);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t num_users() const { return user_ids_.size(); }
  std::size_t num_items() const { return item_ids_.size(); }

  const std::vector<Record>& records() const { return records_; }
  const std::string& user_id(std::size_t u) const { return user_ids_[u]; }
  const std::string& item_id(std::size_t v) const { return item_ids_[v]; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  std::optional<std::size_t> find_user(std::string_view id) const;
  std::optional<std::size_t> find_item(std::string_view id) const;

  Interaction interaction(const Record& r) const;
  std::vector<Interaction> interactions() const;

 private:
  struct TripleHash {
    std::size_t operator()(const std::tuple<std::size_t, std::size_t, std::int64_t>& t) const;
  };

  std::vector<Record> records_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, std::size_t> user_index_;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::unordered_set<std::tuple<std::size_t, std::size_t, std::int64_t>, TripleHash> seen_;
};

/// Header names for each field. An unset price column means the source has
/// no prices and every row takes the fallback.
struct CsvSchema {
  std::string user_column = "user_id";
  std::string item_column = "item_id";
  std::string rating_column = "rating";
  std::string timestamp_column = "timestamp";
  std::optional<std::string> price_column = "price";
};

struct ParseResult {
  InteractionSet set;
  std::size_t malformed_rows = 0;
  std::size_t missing_price_dropped = 0;
  std::size_t missing_price_filled = 0;
  std::size_t duplicate_rows = 0;
};

/// Parses a CSV transaction log. Rows with an empty price take
/// `price_fallback` when given and are dropped otherwise.
///
/// Throws DataError when the stream is unreadable or the header lacks a
/// mapped column.
ParseResult parse_interactions(std::istream& in, const CsvSchema& schema = {},
                               std::optional<double> price_fallback = std::nullopt);

/// Writes `user_id,item_id,rating,timestamp,price` with a header line.
void write_interactions(std::ostream& out, const InteractionSet& set);

/// Repeatedly drops users and items with fewer than `min_count` interactions
/// until every survivor meets the threshold. Indices are re-densified.
InteractionSet filter_min_activity(const InteractionSet& set, std::size_t min_count);

enum class Role { Train, Validation, Test };

std::string_view to_string(Role role);

/// Chronological leave-one-out split. Shares the index space of `all`.
struct SplitDataset {
  InteractionSet all;
  std::vector<Record> train;
  std::vector<Record> validation;  // one per user, indexed by user
  std::vector<Record> test;        // one per user, indexed by user
  /// Sorted distinct items each user touched in any role.
  std::vector<std::vector<std::size_t>> interacted;

  std::size_t num_users() const { return all.num_users(); }
  std::size_t num_items() const { return all.num_items(); }

  const Record& held_out(Role role, std::size_t u) const;

  std::size_t candidate_pool_size(std::size_t u) const;
  /// Items user `u` never interacted with, ascending.
  std::vector<std::size_t> candidate_pool(std::size_t u) const;
  bool has_interacted(std::size_t u, std::size_t v) const;
};

/// Most recent record per user becomes test, the next distinct item becomes
/// validation, the rest train. Timestamp ties are ordered by item index.
/// Throws DataError naming the user if fewer than three distinct items exist.
SplitDataset chrono_split(const InteractionSet& set);

/// Writes the `user_id,item_id,role` manifest, header first.
void write_split_manifest(std::ostream& out, const SplitDataset& split);

/// `count` distinct items drawn uniformly without replacement from the
/// user's candidate pool. Throws DataError when the pool is too small.
std::vector<std::size_t> sample_negatives(const SplitDataset& split, std::size_t u,
                                          std::size_t count, Rng& rng);

/// Mean observed price of each item over every record of the set.
std::vector<double> item_prices(const InteractionSet& set);

}  // namespace rare
