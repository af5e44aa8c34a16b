#include <gtest/gtest.h>

#include <cmath>

#include "rare/prospect.hpp"
#include "rare/rng.hpp"

using namespace rare;

namespace {

ProspectParams random_params(Rng& rng, double lo = 0.01, double hi = 0.99) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng), u(rng), u(rng)};
}

double tk_weight(double p, double e) {
  return std::pow(p, e) / std::pow(std::pow(p, e) + std::pow(1 - p, e), 1 / e);
}

}  // namespace

TEST(Outcome, Examples) {
  EXPECT_NEAR(outcome(3, 2.5, 1.0), 0.462117, 1e-6);
  EXPECT_LT(outcome(2, 2.5, 7.0), 0.0);
  EXPECT_EQ(outcome(4, 4.0, 9.0), 0.0);
}

TEST(Value, Examples) {
  const ProspectParams p{0.88, 0.3, 0.9, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(value(-1.0, p), -1.0);
  EXPECT_EQ(value(0.0, p), 0.0);
  EXPECT_NEAR(value(0.462117, p), 0.456, 5e-4);
  EXPECT_NEAR(value(0.462117, p), 0.9 * std::pow(0.462117, 0.88), 1e-15);
}

TEST(Weight, Examples) {
  for (double e : {0.1, 0.5, 0.9}) {
    EXPECT_EQ(weight(0.0, e), 0.0);
    EXPECT_EQ(weight(1.0, e), 1.0);
  }
  for (double p : {0.01, 0.3, 0.77}) EXPECT_NEAR(weight(p, 1.0), p, 1e-15);
  EXPECT_NEAR(weight(0.5, 0.5), 0.353553, 1e-6);
}

TEST(Weight, BranchSelectsExponent) {
  const ProspectParams p{0.5, 0.5, 0.5, 0.3, 0.8};
  EXPECT_DOUBLE_EQ(weight(0.2, p, true), tk_weight(0.2, 0.3));
  EXPECT_DOUBLE_EQ(weight(0.2, p, false), tk_weight(0.2, 0.8));
}

TEST(Shape, GainConcaveLossConvex) {
  Rng rng = make_rng(1);
  std::uniform_real_distribution<double> xs(1e-3, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_params(rng);
    double a = xs(rng), b = xs(rng);
    if (a == b) continue;
    EXPECT_GT(value(0.5 * (a + b), p), 0.5 * (value(a, p) + value(b, p)));
    EXPECT_LT(value(-0.5 * (a + b), p), 0.5 * (value(-a, p) + value(-b, p)));
    EXPECT_GT(std::abs(value(-1.0, p)), value(1.0, p));
  }
}

TEST(Shape, WeightIncreasingWhereTheFamilyIsMonotone) {
  // This weighting family is only monotone for exponents above ~0.279.
  Rng rng = make_rng(2);
  std::uniform_real_distribution<double> es(0.3, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double e = es(rng);
    double prev = weight(0.0, e);
    for (int s = 1; s <= 1000; ++s) {
      const double w = weight(s / 1000.0, e);
      ASSERT_GT(w, prev) << "e=" << e << " p=" << s / 1000.0;
      prev = w;
    }
  }
}

TEST(Shape, WeightNotMonotoneForSmallExponent) {
  EXPECT_GT(weight(0.05, 0.2), weight(0.2, 0.2));
}

TEST(Shape, SmallProbabilitiesOverweighted) {
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> es(0.2, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double e = es(rng);
    int changes = 0;
    double prev = weight(0.001, e) - 0.001;
    EXPECT_GT(prev, 0.0);
    for (int s = 2; s < 1000; ++s) {
      const double p = s / 1000.0, d = weight(p, e) - p;
      if ((d > 0) != (prev > 0)) ++changes;
      prev = d;
    }
    EXPECT_EQ(changes, 1) << "e=" << e;
    EXPECT_LT(prev, 0.0);
  }
}

TEST(Prospect, CertainTopRating) {
  const ProspectParams p{0.7, 0.6, 0.8, 0.4, 0.6};
  const RatingDistribution d{{0, 0, 0, 0, 1}};
  EXPECT_DOUBLE_EQ(prospect_value(d, 2.5, 4.0, p, AblationMode::Full),
                   value(4.0 * std::tanh(2.5), p));
}

TEST(Prospect, BranchAssignmentAroundReference) {
  const ProspectParams p{0.7, 0.6, 0.8, 0.4, 0.6};
  const RatingDistribution d{{0.1, 0.2, 0.3, 0.25, 0.15}};
  const double price = 3.0, ref = 2.5;
  double want = 0.0;
  for (int r = 1; r <= 5; ++r) {
    const double x = price * std::tanh(r - ref);
    const double pr = d[r - 1];
    if (r <= 2) {
      want += -std::pow(-x, p.beta) * tk_weight(pr, p.delta);
    } else {
      want += p.lambda * std::pow(x, p.alpha) * tk_weight(pr, p.gamma);
    }
  }
  EXPECT_NEAR(prospect_value(d, ref, price, p, AblationMode::Full), want, 1e-14);
}

TEST(Prospect, NoWeightingIsExpectationUnderUniform) {
  const ProspectParams p{0.7, 0.6, 0.8, 0.4, 0.6};
  const RatingDistribution d{{0.2, 0.2, 0.2, 0.2, 0.2}};
  double want = 0.0;
  for (int r = 1; r <= 5; ++r) want += 0.2 * value(outcome(r, 3.3, 2.0), p);
  EXPECT_NEAR(prospect_value(d, 3.3, 2.0, p, AblationMode::NoWeighting), want, 1e-14);
}

TEST(Prospect, UnitExponentsMatchNoWeighting) {
  Rng rng = make_rng(4);
  for (int i = 0; i < 100; ++i) {
    auto p = random_params(rng);
    p.gamma = p.delta = 1.0;
    const RatingDistribution d{{0.05, 0.15, 0.3, 0.3, 0.2}};
    EXPECT_NEAR(prospect_value(d, 2.7, 5.0, p, AblationMode::Full),
                prospect_value(d, 2.7, 5.0, p, AblationMode::NoWeighting), 1e-12);
  }
}

TEST(Prospect, NoReferenceUsesRawRatingGainsOnly) {
  const ProspectParams p{0.7, 0.6, 0.8, 0.4, 0.6};
  const RatingDistribution d{{0.1, 0.2, 0.3, 0.25, 0.15}};
  double want = 0.0;
  for (int r = 1; r <= 5; ++r) want += std::pow(2.0 * std::tanh(r), 0.7) * tk_weight(d[r - 1], 0.4);
  EXPECT_NEAR(prospect_value(d, 3.0, 2.0, p, AblationMode::NoReference), want, 1e-14);
  EXPECT_EQ(prospect_value(d, 1.0, 2.0, p, AblationMode::NoReference),
            prospect_value(d, 4.5, 2.0, p, AblationMode::NoReference));
}

TEST(Prospect, ContinuousInReference) {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> refs(1.1, 4.9), prices(0.5, 50.0);
  const RatingDistribution d{{0.1, 0.2, 0.3, 0.25, 0.15}};
  for (int i = 0; i < 500; ++i) {
    const auto p = random_params(rng, 0.2, 0.99);
    double ref = refs(rng);
    if (std::abs(ref - std::round(ref)) < 1e-3) continue;
    const double price = prices(rng);
    const double a = prospect_value(d, ref, price, p, AblationMode::Full);
    const double b = prospect_value(d, ref + 1e-6, price, p, AblationMode::Full);
    EXPECT_LE(std::abs(a - b), 1e-4 * price);
  }
}

TEST(Prospect, RejectsInvalidDistribution) {
  const RatingDistribution bad{{0.5, 0.5, 0.5, 0, 0}};
  EXPECT_THROW(prospect_value(bad, 3.0, 1.0, ProspectParams{}, AblationMode::Full),
               std::invalid_argument);
}

TEST(Partials, MatchFiniteDifferences) {
  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> refs(1.2, 4.8);
  const RatingDistribution d{{0.1, 0.2, 0.3, 0.25, 0.15}};
  const double h = 1e-6;
  for (auto mode : {AblationMode::Full, AblationMode::NoValuePersonalization,
                    AblationMode::NoWeighting, AblationMode::NoReference}) {
    for (int i = 0; i < 50; ++i) {
      const auto p = random_params(rng, 0.1, 0.9);
      double ref = refs(rng);
      if (std::abs(ref - std::round(ref)) < 0.05) continue;
      const auto got = prospect_value_partials(d, ref, 3.0, p, mode);
      EXPECT_NEAR(got.value, prospect_value(d, ref, 3.0, p, mode), 1e-13);
      for (std::size_t k = 0; k < kNumPtParams; ++k) {
        auto up = p, down = p;
        up[static_cast<PtParam>(k)] += h;
        down[static_cast<PtParam>(k)] -= h;
        const double fd =
            (prospect_value(d, ref, 3.0, up, mode) - prospect_value(d, ref, 3.0, down, mode)) /
            (2 * h);
        EXPECT_NEAR(got.d_param[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
      const double fd_ref = (prospect_value(d, ref + h, 3.0, p, mode) -
                             prospect_value(d, ref - h, 3.0, p, mode)) /
                            (2 * h);
      EXPECT_NEAR(got.d_reference, fd_ref, 1e-6 * std::max(1.0, std::abs(fd_ref)));
    }
  }
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : {AblationMode::Full, AblationMode::NoValuePersonalization,
                 AblationMode::NoWeighting, AblationMode::NoReference}) {
    EXPECT_EQ(parse_ablation_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_ablation_mode("half"), std::invalid_argument);
}
