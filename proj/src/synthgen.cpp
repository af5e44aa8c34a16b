#include "rare/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rare/rng.hpp"

namespace rare {

namespace {

struct ParamRange {
  double lo;
  double hi;
};

// Constrained-space ranges of the true parameters, in PtParam order.
constexpr std::array<ParamRange, kNumPtParams> kTrueRanges = {
    ParamRange{0.5, 0.95}, ParamRange{0.5, 0.95}, ParamRange{0.4, 0.9}, ParamRange{0.4, 0.9},
    ParamRange{0.4, 0.9}};

constexpr double kReferenceLo = 2.0;
constexpr double kReferenceHi = 4.0;

// Fills one factorized table so that g + b_u + l_v + p_u.q_v stays inside
// (logit(lo), logit(hi)) for every pair: the biases take 30% of the half
// width each and the factor product at most 35%.
void draw_table(FactorizedParameter& t, ParamRange range, std::size_t k, Rng& rng) {
  const double lo = logit(range.lo), hi = logit(range.hi);
  const double half = 0.5 * (hi - lo);
  t.global_bias = 0.5 * (lo + hi);
  std::uniform_real_distribution<double> bias(-0.3 * half, 0.3 * half);
  for (auto& x : t.user_bias) x = bias(rng);
  for (auto& x : t.item_bias) x = bias(rng);
  const double f = std::sqrt(0.35 * half / static_cast<double>(k));
  std::uniform_real_distribution<double> factor(-f, f);
  for (auto& x : t.user_factors.data()) x = factor(rng);
  for (auto& x : t.item_factors.data()) x = factor(rng);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

nlohmann::ordered_json table_json(const FactorizedParameter& t) {
  return {{"global_bias", t.global_bias},
          {"user_bias", t.user_bias},
          {"item_bias", t.item_bias},
          {"user_factors", t.user_factors.data()},
          {"item_factors", t.item_factors.data()}};
}

}  // namespace

void SynthSpec::validate() const {
  if (n_users == 0 || n_items == 0 || k_true == 0) {
    throw std::invalid_argument("synth spec needs positive users, items and k_true");
  }
  if (interactions_per_user < 3) {
    throw std::invalid_argument("interactions_per_user must be >= 3 for a leave-one-out split");
  }
  if (choice_set_size < 1) throw std::invalid_argument("choice_set_size must be >= 1");
  if (interactions_per_user + choice_set_size - 1 > n_items) {
    throw std::invalid_argument("not enough items to offer fresh choice sets to every user");
  }
  if (!(price_min > 0.0) || !(price_max >= price_min)) {
    throw std::invalid_argument("price range must satisfy 0 < price_min <= price_max");
  }
  if (!(dist_concentration > 0.0)) throw std::invalid_argument("dist_concentration must be > 0");
}

RatingDistribution draw_rating_distribution(double concentration, Rng& rng) {
  std::exponential_distribution<double> gamma1(1.0);
  std::array<double, kRatingLevels> logw{};
  for (auto& l : logw) l = concentration * std::log(std::max(gamma1(rng), 1e-300));
  const double top = *std::max_element(logw.begin(), logw.end());
  RatingDistribution d;
  double total = 0.0;
  for (std::size_t i = 0; i < kRatingLevels; ++i) {
    d.p[i] = std::exp(logw[i] - top);
    total += d.p[i];
  }
  for (auto& p : d.p) p /= total;
  return d;
}

std::size_t sample_choice(std::span<const double> values, Rng& rng) {
  const auto prob = mnl_probability(values);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    if (r < acc) return i;
  }
  return prob.size() - 1;
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_users, m = spec.n_items;
  SynthData data;
  data.truth.model = RareModel(n, m, spec.k_true, AblationMode::Full);
  auto& params = data.truth.model.params();

  Rng param_rng = make_rng(spec.seed, 0);
  for (std::size_t p = 0; p < kNumPtParams; ++p) {
    draw_table(params.theta[p], kTrueRanges[p], spec.k_true, param_rng);
  }
  std::uniform_real_distribution<double> ref(kReferenceLo, kReferenceHi);
  for (auto& r : params.reference) r = ref(param_rng);

  Rng item_rng = make_rng(spec.seed, 1);
  auto& items = data.truth.items;
  items.dists.resize(m);
  items.sources.assign(m, DistributionSource::Empirical);
  items.prices.resize(m);
  std::uniform_real_distribution<double> price(spec.price_min, spec.price_max);
  for (std::size_t v = 0; v < m; ++v) {
    items.dists[v] = draw_rating_distribution(spec.dist_concentration, item_rng);
    items.prices[v] = price(item_rng);
  }

  auto& set = data.interactions;
  for (std::size_t u = 0; u < n; ++u) set.intern_user("u" + std::to_string(u));
  for (std::size_t v = 0; v < m; ++v) set.intern_item("i" + std::to_string(v));

  Rng choice_rng = make_rng(spec.seed, 2);
  std::uniform_int_distribution<std::size_t> pick_item(0, m - 1);
  std::int64_t clock = 0;
  std::vector<std::size_t> offered;
  std::vector<double> values;
  std::vector<char> chosen(m);
  for (std::size_t u = 0; u < n; ++u) {
    std::fill(chosen.begin(), chosen.end(), 0);
    for (std::size_t t = 0; t < spec.interactions_per_user; ++t) {
      offered.clear();
      while (offered.size() < spec.choice_set_size) {
        const std::size_t v = pick_item(choice_rng);
        if (chosen[v] || std::find(offered.begin(), offered.end(), v) != offered.end()) continue;
        offered.push_back(v);
      }
      values.clear();
      for (std::size_t v : offered) values.push_back(data.truth.prospect_value(u, v));
      const std::size_t v = offered[sample_choice(values, choice_rng)];
      chosen[v] = 1;

      std::discrete_distribution<int> rating(items.dists[v].p.begin(), items.dists[v].p.end());
      set.add(Interaction{set.user_id(u), set.item_id(v), rating(choice_rng) + kMinRating,
                          ++clock, items.prices[v]});
    }
  }
  return data;
}

double spearman(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman inputs differ in length");
  if (degenerate) *degenerate = false;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double nn = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / nn;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / nn;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return sab / std::sqrt(saa * sbb);
}

RecoveryReport recovery_report(const RareModel& trained, const SynthTruth& truth,
                               std::span<const std::pair<std::size_t, std::size_t>> probes) {
  if (probes.size() < 10) throw std::invalid_argument("recovery_report needs at least 10 probes");
  if (trained.num_users() != truth.model.num_users() ||
      trained.num_items() != truth.model.num_items()) {
    throw std::invalid_argument("trained model and truth differ in dimensions");
  }
  std::vector<double> truth_values, learned_values;
  truth_values.reserve(probes.size());
  learned_values.reserve(probes.size());
  for (const auto& [u, v] : probes) {
    truth_values.push_back(truth.prospect_value(u, v));
    learned_values.push_back(trained.score(u, v, truth.items));
  }
  RecoveryReport report;
  report.probes = probes.size();
  report.value_correlation = spearman(truth_values, learned_values, &report.value_degenerate);
  report.reference_correlation = spearman(truth.model.params().reference,
                                          trained.params().reference,
                                          &report.reference_degenerate);
  return report;
}

void write_truth_json(std::ostream& out, const SynthSpec& spec, const SynthData& data) {
  const auto& set = data.interactions;
  const auto& model = data.truth.model;
  const auto& items = data.truth.items;
  nlohmann::ordered_json j;
  j["spec"] = {{"n_users", spec.n_users},
               {"n_items", spec.n_items},
               {"k_true", spec.k_true},
               {"price_min", spec.price_min},
               {"price_max", spec.price_max},
               {"dist_concentration", spec.dist_concentration},
               {"interactions_per_user", spec.interactions_per_user},
               {"choice_set_size", spec.choice_set_size},
               {"seed", spec.seed}};
  j["user_ids"] = set.user_ids();
  j["item_ids"] = set.item_ids();
  j["reference"] = model.params().reference;
  auto& tables = j["parameters"];
  for (std::size_t p = 0; p < kNumPtParams; ++p) {
    tables[std::string(to_string(static_cast<PtParam>(p)))] = table_json(model.params().theta[p]);
  }
  auto& item_json = j["items"];
  item_json = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < items.size(); ++v) {
    item_json.push_back({{"item_id", set.item_id(v)},
                         {"price", items.prices[v]},
                         {"distribution", items.dists[v].p}});
  }
  out << j.dump(1) << '\n';
}

}  // namespace rare
