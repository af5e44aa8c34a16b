#include "rare/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "rare/error.hpp"
#include "rare/format.hpp"

namespace rare {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::size_t column_of(const std::vector<std::string_view>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("header is missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::size_t InteractionSet::TripleHash::operator()(
    const std::tuple<std::size_t, std::size_t, std::int64_t>& t) const {
  std::uint64_t h = mix_seed(std::get<0>(t), std::get<1>(t));
  return static_cast<std::size_t>(mix_seed(h, static_cast<std::uint64_t>(std::get<2>(t))));
}

std::size_t InteractionSet::intern_user(std::string_view id) {
  auto [it, inserted] = user_index_.try_emplace(std::string(id), user_ids_.size());
  if (inserted) user_ids_.emplace_back(id);
  return it->second;
}

std::size_t InteractionSet::intern_item(std::string_view id) {
  auto [it, inserted] = item_index_.try_emplace(std::string(id), item_ids_.size());
  if (inserted) item_ids_.emplace_back(id);
  return it->second;
}

bool InteractionSet::add(const Interaction& x) {
  const std::size_t u = intern_user(x.user_id);
  const std::size_t v = intern_item(x.item_id);
  if (!seen_.emplace(u, v, x.timestamp).second) return false;
  records_.push_back(Record{u, v, x.rating, x.timestamp, x.price});
  return true;
}

InteractionSet InteractionSet::from_interactions(const std::vector<Interaction>& rows) {
  InteractionSet set;
  for (const auto& row : rows) set.add(row);
  return set;
}

std::optional<std::size_t> InteractionSet::find_user(std::string_view id) const {
  const auto it = user_index_.find(std::string(id));
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> InteractionSet::find_item(std::string_view id) const {
  const auto it = item_index_.find(std::string(id));
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

Interaction InteractionSet::interaction(const Record& r) const {
  return Interaction{user_ids_[r.user], item_ids_[r.item], r.rating, r.timestamp, r.price};
}

std::vector<Interaction> InteractionSet::interactions() const {
  std::vector<Interaction> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(interaction(r));
  return out;
}

ParseResult parse_interactions(std::istream& in, const CsvSchema& schema,
                               std::optional<double> price_fallback) {
  if (!in) throw DataError("interaction source is not readable");
  if (!schema.price_column && !price_fallback) {
    throw DataError("no price column mapped and no price fallback configured");
  }
  std::string line;
  if (!std::getline(in, line)) throw DataError("interaction source is empty");
  const std::string header_line = line;
  const auto header = split_fields(header_line);
  const std::size_t user_col = column_of(header, schema.user_column);
  const std::size_t item_col = column_of(header, schema.item_column);
  const std::size_t rating_col = column_of(header, schema.rating_column);
  const std::size_t time_col = column_of(header, schema.timestamp_column);
  std::optional<std::size_t> price_col;
  if (schema.price_column) price_col = column_of(header, *schema.price_column);

  ParseResult result;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      ++result.malformed_rows;
      continue;
    }
    const auto rating = parse_number<int>(fields[rating_col]);
    const auto timestamp = parse_number<std::int64_t>(fields[time_col]);
    if (fields[user_col].empty() || fields[item_col].empty() || !rating || !timestamp ||
        *rating < kMinRating || *rating > kMaxRating) {
      ++result.malformed_rows;
      continue;
    }
    double price = 0.0;
    if (price_col && !fields[*price_col].empty()) {
      const auto parsed = parse_number<double>(fields[*price_col]);
      if (!parsed || !std::isfinite(*parsed) || *parsed < 0.0) {
        ++result.malformed_rows;
        continue;
      }
      price = *parsed;
    } else if (price_fallback) {
      price = *price_fallback;
      ++result.missing_price_filled;
    } else {
      ++result.missing_price_dropped;
      continue;
    }
    Interaction x{std::string(fields[user_col]), std::string(fields[item_col]), *rating,
                  *timestamp, price};
    if (!result.set.add(x)) ++result.duplicate_rows;
  }
  if (in.bad()) throw DataError("error while reading interaction source");
  return result;
}

void write_interactions(std::ostream& out, const InteractionSet& set) {
  out << "user_id,item_id,rating,timestamp,price\n";
  for (const auto& r : set.records()) {
    out << set.user_id(r.user) << ',' << set.item_id(r.item) << ',' << r.rating << ','
        << r.timestamp << ',' << shortest(r.price) << '\n';
  }
}

InteractionSet filter_min_activity(const InteractionSet& set, std::size_t min_count) {
  if (min_count == 0) throw std::invalid_argument("min_count must be >= 1");
  const auto& records = set.records();
  std::vector<bool> keep(records.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::size_t> user_count(set.num_users(), 0);
    std::vector<std::size_t> item_count(set.num_items(), 0);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!keep[i]) continue;
      ++user_count[records[i].user];
      ++item_count[records[i].item];
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (keep[i] && (user_count[records[i].user] < min_count ||
                      item_count[records[i].item] < min_count)) {
        keep[i] = false;
        changed = true;
      }
    }
  }
  InteractionSet out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.add(set.interaction(records[i]));
  }
  if (out.empty()) {
    throw DataError("no interactions survive filtering at min_count=" +
                    std::to_string(min_count));
  }
  return out;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Train: return "train";
    case Role::Validation: return "val";
    case Role::Test: return "test";
  }
  return "unknown";
}

const Record& SplitDataset::held_out(Role role, std::size_t u) const {
  if (role == Role::Train) throw std::invalid_argument("train role has no held-out record");
  return role == Role::Test ? test.at(u) : validation.at(u);
}

std::size_t SplitDataset::candidate_pool_size(std::size_t u) const {
  return num_items() - interacted.at(u).size();
}

std::vector<std::size_t> SplitDataset::candidate_pool(std::size_t u) const {
  const auto& seen = interacted.at(u);
  std::vector<std::size_t> pool;
  pool.reserve(candidate_pool_size(u));
  auto it = seen.begin();
  for (std::size_t v = 0; v < num_items(); ++v) {
    if (it != seen.end() && *it == v) {
      ++it;
      continue;
    }
    pool.push_back(v);
  }
  return pool;
}

bool SplitDataset::has_interacted(std::size_t u, std::size_t v) const {
  const auto& seen = interacted.at(u);
  return std::binary_search(seen.begin(), seen.end(), v);
}

SplitDataset chrono_split(const InteractionSet& set) {
  const std::size_t n = set.num_users();
  std::vector<std::vector<Record>> by_user(n);
  for (const auto& r : set.records()) by_user[r.user].push_back(r);

  SplitDataset split;
  split.all = set;
  split.validation.resize(n);
  split.test.resize(n);
  split.interacted.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    auto& rows = by_user[u];
    std::stable_sort(rows.begin(), rows.end(), [](const Record& a, const Record& b) {
      return std::tie(a.timestamp, a.item) < std::tie(b.timestamp, b.item);
    });
    const auto fail = [&] {
      return DataError("user '" + set.user_id(u) +
                       "' has fewer than 3 distinct items; cannot split");
    };
    if (rows.size() < 3) throw fail();
    const Record test = rows.back();
    std::optional<Record> val;
    for (auto it = rows.rbegin() + 1; it != rows.rend(); ++it) {
      if (it->item != test.item) {
        val = *it;
        break;
      }
    }
    if (!val) throw fail();
    std::size_t kept = 0;
    for (const auto& r : rows) {
      if (r.item == test.item || r.item == val->item) continue;
      split.train.push_back(r);
      split.interacted[u].push_back(r.item);
      ++kept;
    }
    if (kept == 0) throw fail();
    split.test[u] = test;
    split.validation[u] = *val;
    auto& seen = split.interacted[u];
    seen.push_back(test.item);
    seen.push_back(val->item);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  }
  return split;
}

void write_split_manifest(std::ostream& out, const SplitDataset& split) {
  const auto& set = split.all;
  out << "user_id,item_id,role\n";
  for (const auto& r : split.train) {
    out << set.user_id(r.user) << ',' << set.item_id(r.item) << ",train\n";
  }
  for (std::size_t u = 0; u < split.num_users(); ++u) {
    out << set.user_id(u) << ',' << set.item_id(split.validation[u].item) << ",val\n";
    out << set.user_id(u) << ',' << set.item_id(split.test[u].item) << ",test\n";
  }
}

std::vector<std::size_t> sample_negatives(const SplitDataset& split, std::size_t u,
                                          std::size_t count, Rng& rng) {
  const std::size_t pool_size = split.candidate_pool_size(u);
  if (pool_size < count) {
    throw DataError("user '" + split.all.user_id(u) + "' has only " +
                    std::to_string(pool_size) + " candidate negatives, " +
                    std::to_string(count) + " requested");
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  if (2 * count <= pool_size) {
    // Sparse case: rejection sampling against the sorted interacted list.
    std::uniform_int_distribution<std::size_t> pick(0, split.num_items() - 1);
    while (out.size() < count) {
      const std::size_t v = pick(rng);
      if (split.has_interacted(u, v)) continue;
      if (std::find(out.begin(), out.end(), v) != out.end()) continue;
      out.push_back(v);
    }
    return out;
  }
  auto pool = split.candidate_pool(u);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push_back(pool[i]);
  }
  return out;
}

std::vector<double> item_prices(const InteractionSet& set) {
  std::vector<double> sum(set.num_items(), 0.0);
  std::vector<std::size_t> count(set.num_items(), 0);
  for (const auto& r : set.records()) {
    sum[r.item] += r.price;
    ++count[r.item];
  }
  for (std::size_t v = 0; v < sum.size(); ++v) {
    if (count[v] > 0) sum[v] /= static_cast<double>(count[v]);
  }
  return sum;
}

}  // namespace rare
