#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rare/error.hpp"
#include "rare/model.hpp"
#include "rare/synthgen.hpp"

using namespace rare;

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(800.0), 1.0, 1e-15);
  EXPECT_GE(sigmoid(-800.0), 0.0);
  EXPECT_NEAR(logit(sigmoid(1.3)), 1.3, 1e-12);
}

TEST(Factorized, ZeroIsHalf) {
  FactorizedParameter t(2, 3, 4);
  EXPECT_EQ(param_at(t, 1, 2), 0.5);
}

TEST(Factorized, GlobalOnlyIsPairIndependent) {
  FactorizedParameter t(2, 3, 4);
  t.global_bias = 1.1;
  for (std::size_t u = 0; u < 2; ++u) {
    for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(param_at(t, u, v), sigmoid(1.1));
  }
}

TEST(Factorized, HandComputedExample) {
  FactorizedParameter t(1, 1, 2);
  t.global_bias = 0.2;
  t.user_bias[0] = 0.1;
  t.item_bias[0] = -0.3;
  t.user_factors(0, 0) = 1.0;
  t.user_factors(0, 1) = 0.5;
  t.item_factors(0, 0) = 0.3;
  t.item_factors(0, 1) = 0.4;  // 0.3 + 0.2 = 0.5
  EXPECT_NEAR(param_at(t, 0, 0), 0.622459, 1e-6);
}

TEST(Structure, ParameterCount) {
  for (auto [n, m, k] : {std::tuple{3, 4, 2}, std::tuple{1, 1, 1}, std::tuple{17, 40, 8}}) {
    const RareModel model(n, m, k, AblationMode::Full);
    EXPECT_EQ(model.parameter_count(), 5u + 5u * (n + m) * (k + 1) + n);
    EXPECT_EQ(model.params().flatten().size(), model.parameter_count());
  }
}

TEST(Structure, FlattenAssignRoundTrip) {
  auto t = fixture::tiny_problem(3, 4, 2, AblationMode::Full, 1);
  const auto flat = t.model.params().flatten();
  RareModel other(3, 4, 2, AblationMode::Full);
  other.params().assign(flat);
  EXPECT_EQ(other.params(), t.model.params());
}

TEST(Structure, ConstrainedParametersInUnitInterval) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto t = fixture::tiny_problem(3, 4, 2, AblationMode::Full, seed);
    for (auto& x : t.model.params()[PtParam::Alpha].user_bias) x *= 20.0;
    for (std::size_t u = 0; u < 3; ++u) {
      for (std::size_t v = 0; v < 4; ++v) {
        const auto p = t.model.prospect_params(u, v);
        EXPECT_TRUE(p.valid());
      }
    }
  }
}

TEST(Forward, IdenticalItemsScoreIdentically) {
  auto model = RareModel::initialized(2, 2, 3, AblationMode::Full, 4);
  for (auto& table : model.params().theta) {
    table.item_bias[1] = table.item_bias[0];
    for (std::size_t f = 0; f < 3; ++f) table.item_factors(1, f) = table.item_factors(0, f);
  }
  ItemSide items;
  items.dists = {RatingDistribution{{0.1, 0.2, 0.3, 0.2, 0.2}}, RatingDistribution{{0.1, 0.2, 0.3, 0.2, 0.2}}};
  items.sources.assign(2, DistributionSource::Empirical);
  items.prices = {4.0, 4.0};
  const std::vector<std::size_t> ids{0, 1};
  const auto v = model.forward(1, ids, items);
  EXPECT_EQ(v[0], v[1]);
}

TEST(Forward, NoReferenceIgnoresReference) {
  auto t = fixture::tiny_problem(3, 4, 2, AblationMode::NoReference, 2);
  const double before = t.model.score(1, 2, t.items);
  t.model.params().reference[1] += 0.77;
  EXPECT_EQ(t.model.score(1, 2, t.items), before);
}

TEST(Forward, FreshModelValueIsBounded) {
  const auto model = RareModel::initialized(1, 1, 4, AblationMode::Full, 9);
  ItemSide items;
  items.dists = {RatingDistribution{{0.2, 0.2, 0.2, 0.2, 0.2}}};
  items.sources = {DistributionSource::Empirical};
  items.prices = {1.0};
  const double v = model.score(0, 0, items);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(std::abs(v), 5.0);
}

TEST(Mnl, Examples) {
  const std::vector<double> equal{0.3, 0.3, 0.3};
  for (double p : mnl_probability(equal)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  const std::vector<double> far{5.0, 5.0 - 1000.0};
  const auto pf = mnl_probability(far);
  EXPECT_NEAR(pf[0], 1.0, 1e-15);
  EXPECT_GE(pf[1], 0.0);
  const std::vector<double> v{1.0, 0.0, 0.0};
  const auto p = mnl_probability(v);
  EXPECT_NEAR(p[0], 0.576117, 1e-6);
  EXPECT_NEAR(p[1], 0.211942, 1e-6);
  EXPECT_NEAR(p[2], 0.211942, 1e-6);
  const auto o = oracle::softmax(v);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], o[i], 1e-15);
}

TEST(Mnl, SumsToOneShiftInvariantPermutationEquivariant) {
  Rng rng = make_rng(8);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(2 + i % 5);
    for (auto& x : v) x = g(rng);
    const auto p = mnl_probability(v);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    auto shifted = v;
    for (auto& x : shifted) x += 123.4;
    const auto ps = mnl_probability(shifted);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(p[j], ps[j], 1e-12);
    std::vector<double> rev(v.rbegin(), v.rend());
    const auto pr = mnl_probability(rev);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(p[j], pr[v.size() - 1 - j], 1e-15);
  }
}

TEST(Loss, UniformChoiceOfThree) {
  RareModel model(1, 3, 1, AblationMode::Full);
  ItemSide items;
  items.dists.assign(3, RatingDistribution{{0.2, 0.2, 0.2, 0.2, 0.2}});
  items.sources.assign(3, DistributionSource::Empirical);
  items.prices.assign(3, 2.0);
  const std::vector<ChoiceExample> batch{{0, 0, {1, 2}}};
  EXPECT_NEAR(loss(model, batch, items, 0.0), 1.098612, 1e-6);
  EXPECT_NEAR(loss(model, batch, items, 5.0), std::log(3.0), 1e-12);
}

TEST(Loss, MatchesIndependentRecomputation) {
  auto t = fixture::tiny_problem(1, 3, 1, AblationMode::Full, 12);
  const std::vector<ChoiceExample> batch{{0, 1, {0, 2}}};
  std::vector<double> values;
  for (std::size_t v : {1, 0, 2}) {
    const auto& theta = t.model.params().theta;
    ProspectParams p;
    for (std::size_t q = 0; q < kNumPtParams; ++q) {
      const double raw = theta[q].global_bias + theta[q].user_bias[0] + theta[q].item_bias[v] +
                         theta[q].user_factors(0, 0) * theta[q].item_factors(v, 0);
      p[static_cast<PtParam>(q)] = 1.0 / (1.0 + std::exp(-raw));
    }
    values.push_back(prospect_value(t.items.dists[v], t.model.params().reference[0],
                                    t.items.prices[v], p, AblationMode::Full));
  }
  const double reg = 0.01;
  const auto flat = t.model.params().flatten();
  const double norm = std::inner_product(flat.begin(), flat.end(), flat.begin(), 0.0);
  const double want = -std::log(oracle::softmax(values)[0]) + reg * norm;
  EXPECT_NEAR(loss(t.model, batch, t.items, reg), want, 1e-10);
}

class GradientCheck : public ::testing::TestWithParam<std::tuple<AblationMode, int>> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const auto [mode, seed] = GetParam();
  const auto t = fixture::tiny_problem(3, 4, 2, mode, seed);
  const double reg = 1e-3;
  const auto analytic = gradients(t.model, t.batch, t.items, reg);
  EXPECT_NEAR(analytic.loss, loss(t.model, t.batch, t.items, reg), 1e-12);
  const auto numeric = oracle::numeric_gradient(t.model, t.batch, t.items, reg, 1e-5);
  EXPECT_LE(fixture::max_relative_error(analytic.gradient.flatten(), numeric), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(AllModes, GradientCheck,
                         ::testing::Combine(::testing::ValuesIn(fixture::kAllModes),
                                            ::testing::Range(1, 6)),
                         [](const auto& info) {
                           std::string name(to_string(std::get<0>(info.param)));
                           std::replace(name.begin(), name.end(), '-', '_');
                           return name + "_seed" + std::to_string(std::get<1>(info.param));
                         });

TEST(Gradient, RegularizerOnlyWithZeroPrices) {
  auto t = fixture::tiny_problem(3, 4, 2, AblationMode::Full, 3);
  std::fill(t.items.prices.begin(), t.items.prices.end(), 0.0);
  const double reg = 0.25;
  const auto g = gradients(t.model, t.batch, t.items, reg).gradient.flatten();
  const auto theta = t.model.params().flatten();
  for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_NEAR(g[i], 2.0 * reg * theta[i], 1e-15);
}

TEST(Gradient, NoWeightingLeavesExponentsUntouched) {
  const auto t = fixture::tiny_problem(3, 4, 2, AblationMode::NoWeighting, 4);
  const auto g = gradients(t.model, t.batch, t.items, 0.0).gradient;
  for (PtParam p : {PtParam::Gamma, PtParam::Delta}) {
    RareModel zeros(3, 4, 2, AblationMode::NoWeighting);
    EXPECT_EQ(g[p], zeros.params()[p]);
  }
}

namespace {

struct SmallWorld {
  SynthData data;
  SplitDataset split;
};

SmallWorld small_world(std::size_t users = 20) {
  SynthSpec spec;
  spec.n_users = users;
  spec.n_items = 150;
  spec.seed = 5;
  SmallWorld w{generate(spec), {}};
  w.split = chrono_split(w.data.interactions);
  return w;
}

}  // namespace

TEST(Train, LossDecreasesOverTenEpochs) {
  const auto w = small_world();
  TrainConfig c;
  c.k = 2;
  c.learning_rate = 1e-2;
  c.epochs = 10;
  c.patience_epochs = 10;
  const auto r = train(c, w.split, w.data.truth.items);
  ASSERT_EQ(r.log.size(), 10u);
  EXPECT_LT(r.log[9].train_loss, r.log[0].train_loss);
}

TEST(Train, SameSeedBitIdentical) {
  const auto w = small_world();
  TrainConfig c;
  c.k = 3;
  c.epochs = 4;
  const auto a = train(c, w.split, w.data.truth.items);
  const auto b = train(c, w.split, w.data.truth.items);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, ThreadCountDoesNotChangeResult) {
  const auto w = small_world();
  TrainConfig c;
  c.k = 2;
  c.epochs = 3;
  const auto a = train(c, w.split, w.data.truth.items);
  c.threads = 3;
  const auto b = train(c, w.split, w.data.truth.items);
  EXPECT_EQ(a.model, b.model);
}

TEST(Train, ZeroLearningRateKeepsInitialParameters) {
  const auto w = small_world();
  TrainConfig c;
  c.learning_rate = 0.0;
  c.epochs = 3;
  const auto r = train(c, w.split, w.data.truth.items);
  EXPECT_EQ(r.model.params(), RareModel::initialized(w.split.num_users(), w.split.num_items(),
                                                     c.k, c.mode, c.seed)
                                  .params());
}

TEST(Train, HeavierRegularizationShrinks) {
  const auto w = small_world();
  TrainConfig c;
  c.k = 2;
  c.epochs = 8;
  c.patience_epochs = 100;
  c.learning_rate = 5e-3;
  const auto light = train(c, w.split, w.data.truth.items);
  c.reg_weight = 0.2;
  const auto heavy = train(c, w.split, w.data.truth.items);
  EXPECT_LT(heavy.model.params().squared_norm(), light.model.params().squared_norm());
  double dev_light = 0.0, dev_heavy = 0.0;
  for (std::size_t u = 0; u < w.split.num_users(); ++u) {
    for (std::size_t v = 0; v < w.split.num_items(); v += 7) {
      const auto pl = light.model.prospect_params(u, v);
      const auto ph = heavy.model.prospect_params(u, v);
      for (std::size_t q = 0; q < kNumPtParams; ++q) {
        dev_light += std::abs(pl[static_cast<PtParam>(q)] - 0.5);
        dev_heavy += std::abs(ph[static_cast<PtParam>(q)] - 0.5);
      }
    }
  }
  EXPECT_LT(dev_heavy, dev_light);
}

TEST(Train, RejectsMismatchedItemSide) {
  const auto w = small_world();
  ItemSide items = w.data.truth.items;
  items.dists.pop_back();
  EXPECT_THROW(train(TrainConfig{}, w.split, items), std::invalid_argument);
}

TEST(Train, DivergenceIsReported) {
  const auto w = small_world();
  TrainConfig c;
  c.learning_rate = 1e300;
  c.epochs = 2;
  EXPECT_THROW(train(c, w.split, w.data.truth.items), DivergenceError);
}
