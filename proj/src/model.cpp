#include "rare/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rare/error.hpp"
#include "rare/eval.hpp"
#include "rare/format.hpp"
#include "rare/rng.hpp"

namespace rare {

namespace {

constexpr std::array<PtParam, kNumPtParams> kAllParams = {
    PtParam::Alpha, PtParam::Beta, PtParam::Lambda, PtParam::Gamma, PtParam::Delta};

template <typename Table, typename F>
void visit_scalars(Table& t, F&& f) {
  for (auto& theta : t.theta) {
    f(theta.global_bias);
    for (auto& x : theta.user_bias) f(x);
    for (auto& x : theta.item_bias) f(x);
    for (auto& x : theta.user_factors.data()) f(x);
    for (auto& x : theta.item_factors.data()) f(x);
  }
  for (auto& x : t.reference) f(x);
}

void check_index(std::size_t i, std::size_t bound, const char* what) {
  if (i >= bound) {
    throw std::out_of_range(std::string(what) + " index " + std::to_string(i) +
                            " out of range " + std::to_string(bound));
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

FactorizedParameter::FactorizedParameter(std::size_t n, std::size_t m, std::size_t k)
    : user_bias(n, 0.0), item_bias(m, 0.0), user_factors(n, k), item_factors(m, k) {}

double FactorizedParameter::raw(std::size_t u, std::size_t v) const {
  return global_bias + user_bias[u] + item_bias[v] +
         dot(user_factors.row(u), item_factors.row(v));
}

std::size_t FactorizedParameter::size() const {
  return 1 + user_bias.size() + item_bias.size() + user_factors.data().size() +
         item_factors.data().size();
}

double param_at(const FactorizedParameter& theta, std::size_t u, std::size_t v) {
  check_index(u, theta.user_bias.size(), "user");
  check_index(v, theta.item_bias.size(), "item");
  return sigmoid(theta.raw(u, v));
}

ParameterTables::ParameterTables(std::size_t n, std::size_t m, std::size_t k)
    : reference(n, 0.0) {
  for (auto& t : theta) t = FactorizedParameter(n, m, k);
}

std::size_t ParameterTables::size() const {
  std::size_t s = reference.size();
  for (const auto& t : theta) s += t.size();
  return s;
}

std::vector<double> ParameterTables::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  visit_scalars(*this, [&](double x) { out.push_back(x); });
  return out;
}

void ParameterTables::assign(std::span<const double> values) {
  if (values.size() != size()) throw std::invalid_argument("parameter vector size mismatch");
  std::size_t i = 0;
  visit_scalars(*this, [&](double& x) { x = values[i++]; });
}

double ParameterTables::squared_norm() const {
  double s = 0.0;
  visit_scalars(*this, [&](double x) { s += x * x; });
  return s;
}

void ParameterTables::axpy(double a, const ParameterTables& other) {
  for (std::size_t p = 0; p < kNumPtParams; ++p) {
    auto& dst = theta[p];
    const auto& src = other.theta[p];
    dst.global_bias += a * src.global_bias;
    for (std::size_t i = 0; i < dst.user_bias.size(); ++i) dst.user_bias[i] += a * src.user_bias[i];
    for (std::size_t i = 0; i < dst.item_bias.size(); ++i) dst.item_bias[i] += a * src.item_bias[i];
    auto& uf = dst.user_factors.data();
    const auto& suf = src.user_factors.data();
    for (std::size_t i = 0; i < uf.size(); ++i) uf[i] += a * suf[i];
    auto& itf = dst.item_factors.data();
    const auto& sitf = src.item_factors.data();
    for (std::size_t i = 0; i < itf.size(); ++i) itf[i] += a * sitf[i];
  }
  for (std::size_t i = 0; i < reference.size(); ++i) reference[i] += a * other.reference[i];
}

bool ParameterTables::all_finite() const {
  bool ok = true;
  visit_scalars(*this, [&](double x) { ok = ok && std::isfinite(x); });
  return ok;
}

RareModel::RareModel(std::size_t num_users, std::size_t num_items, std::size_t k,
                     AblationMode mode)
    : num_users_(num_users),
      num_items_(num_items),
      k_(k),
      mode_(mode),
      params_(num_users, num_items, k) {}

RareModel RareModel::initialized(std::size_t num_users, std::size_t num_items, std::size_t k,
                                 AblationMode mode, std::uint64_t seed) {
  RareModel model(num_users, num_items, k, mode);
  auto& params = model.params_;
  params[PtParam::Alpha].global_bias = logit(0.7);
  params[PtParam::Beta].global_bias = logit(0.7);
  params[PtParam::Lambda].global_bias = 0.0;
  params[PtParam::Gamma].global_bias = 0.0;
  params[PtParam::Delta].global_bias = 0.0;
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> init(0.0, 0.01);
  for (auto& theta : params.theta) {
    for (auto& x : theta.user_factors.data()) x = init(rng);
    for (auto& x : theta.item_factors.data()) x = init(rng);
  }
  std::fill(params.reference.begin(), params.reference.end(), 3.0);
  return model;
}

bool RareModel::personalized(PtParam p) const {
  if (mode_ != AblationMode::NoValuePersonalization) return true;
  return p == PtParam::Gamma || p == PtParam::Delta;
}

ProspectParams RareModel::prospect_params(std::size_t u, std::size_t v) const {
  check_index(u, num_users_, "user");
  check_index(v, num_items_, "item");
  ProspectParams out;
  for (PtParam p : kAllParams) {
    const auto& theta = params_[p];
    out[p] = personalized(p) ? sigmoid(theta.raw(u, v)) : sigmoid(theta.global_bias);
  }
  return out;
}

double RareModel::score(std::size_t u, std::size_t v, const ItemSide& items) const {
  check_index(v, items.size(), "item");
  return prospect_value(items.dists[v], params_.reference[u], items.prices[v],
                        prospect_params(u, v), mode_);
}

std::vector<double> RareModel::forward(std::size_t u, std::span<const std::size_t> item_ids,
                                       const ItemSide& items) const {
  std::vector<double> out;
  out.reserve(item_ids.size());
  for (std::size_t v : item_ids) out.push_back(score(u, v, items));
  return out;
}

std::vector<double> mnl_probability(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mnl_probability needs at least one value");
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(values[i] - top);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

namespace {

// Negative log-probability of alternative 0 via log-sum-exp.
double choice_nll(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double x : values) total += std::exp(x - top);
  return -(values[0] - top - std::log(total));
}

std::vector<std::size_t> choice_set(const ChoiceExample& ex) {
  std::vector<std::size_t> set;
  set.reserve(1 + ex.negatives.size());
  set.push_back(ex.positive);
  set.insert(set.end(), ex.negatives.begin(), ex.negatives.end());
  return set;
}

}  // namespace

double loss(const RareModel& model, std::span<const ChoiceExample> batch, const ItemSide& items,
            double reg_weight) {
  if (batch.empty()) throw std::invalid_argument("loss of an empty batch");
  double nll = 0.0;
  for (const auto& ex : batch) {
    const auto set = choice_set(ex);
    nll += choice_nll(model.forward(ex.user, set, items));
  }
  return nll + reg_weight * model.params().squared_norm();
}

LossGradient gradients(const RareModel& model, std::span<const ChoiceExample> batch,
                       const ItemSide& items, double reg_weight) {
  if (batch.empty()) throw std::invalid_argument("gradient of an empty batch");
  const auto& params = model.params();
  LossGradient out;
  out.gradient = ParameterTables(model.num_users(), model.num_items(), model.k());
  auto& grad = out.gradient;
  const std::size_t k = model.k();

  std::vector<ProspectPartials> partials;
  std::vector<ProspectParams> shape;
  std::vector<double> values;
  for (const auto& ex : batch) {
    const std::size_t u = ex.user;
    check_index(u, model.num_users(), "user");
    const auto set = choice_set(ex);
    partials.clear();
    shape.clear();
    values.clear();
    for (std::size_t v : set) {
      check_index(v, items.size(), "item");
      shape.push_back(model.prospect_params(u, v));
      partials.push_back(prospect_value_partials(items.dists[v], params.reference[u],
                                                 items.prices[v], shape.back(), model.mode()));
      values.push_back(partials.back().value);
    }
    out.data_loss += choice_nll(values);
    const auto prob = mnl_probability(values);

    for (std::size_t j = 0; j < set.size(); ++j) {
      const std::size_t v = set[j];
      // d(-log P_0) / d V_j
      const double coeff = prob[j] - (j == 0 ? 1.0 : 0.0);
      grad.reference[u] += coeff * partials[j].d_reference;
      for (PtParam p : kAllParams) {
        const std::size_t pi = static_cast<std::size_t>(p);
        const double c = shape[j][p];
        const double g = coeff * partials[j].d_param[pi] * c * (1.0 - c);
        if (g == 0.0) continue;
        auto& gt = grad[p];
        gt.global_bias += g;
        if (!model.personalized(p)) continue;
        const auto& theta = params[p];
        gt.user_bias[u] += g;
        gt.item_bias[v] += g;
        auto gu = gt.user_factors.row(u);
        auto gv = gt.item_factors.row(v);
        const auto pu = theta.user_factors.row(u);
        const auto qv = theta.item_factors.row(v);
        for (std::size_t f = 0; f < k; ++f) {
          gu[f] += g * qv[f];
          gv[f] += g * pu[f];
        }
      }
    }
  }

  out.loss = out.data_loss;
  if (reg_weight != 0.0) {
    out.loss += reg_weight * params.squared_norm();
    grad.axpy(2.0 * reg_weight, params);
  }
  return out;
}

TrainResult train(const TrainConfig& config, const SplitDataset& split, const ItemSide& items,
                  const EpochCallback& on_epoch) {
  if (split.train.empty()) throw DataError("training split is empty");
  if (items.size() != split.num_items()) {
    throw std::invalid_argument("item side does not match the dataset's item count");
  }
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (config.learning_rate < 0.0 || config.reg_weight < 0.0) {
    throw std::invalid_argument("learning rate and reg weight must be non-negative");
  }

  RareModel model = RareModel::initialized(split.num_users(), split.num_items(), config.k,
                                           config.mode, config.seed);
  Rng rng = make_rng(config.seed, 1);

  EvalOptions val_options;
  val_options.cutoffs = {10};
  val_options.seed = mix_seed(config.seed, 2);
  val_options.num_negatives = config.eval_negatives;
  val_options.target = Role::Validation;
  val_options.threads = config.threads;

  TrainResult result;
  result.model = model;
  result.best_val_ndcg10 = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ChoiceExample> batch;
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double nll = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const Record& r = split.train[order[i]];
        batch.push_back(ChoiceExample{
            r.user, r.item,
            sample_negatives(split, r.user, config.negatives_per_positive, rng)});
      }
      auto step = gradients(model, batch, items, config.reg_weight);
      if (!std::isfinite(step.loss)) {
        throw DivergenceError("training loss became non-finite in epoch " +
                              std::to_string(epoch) + "; lower the learning rate");
      }
      nll += step.data_loss;
      if (config.learning_rate != 0.0) model.params().axpy(-config.learning_rate, step.gradient);
    }
    if (!model.params().all_finite()) {
      throw DivergenceError("parameters became non-finite in epoch " + std::to_string(epoch));
    }

    const auto report = evaluate(
        [&](std::size_t u, std::size_t v) { return model.score(u, v, items); }, split,
        val_options);
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = nll / static_cast<double>(order.size());
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

void write_train_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,train_loss,val_ndcg10,elapsed_ms\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << shortest(e.train_loss) << ',' << shortest(e.val_ndcg10) << ','
        << static_cast<std::int64_t>(std::llround(e.elapsed_ms)) << '\n';
  }
}

}  // namespace rare
