#pragma once

// Prospect-theory primitives: outcomes relative to a reference rating,
// the asymmetric value function, the probability weighting function and
// the prospect value of a rating distribution.

#include <array>
#include <cstddef>
#include <string_view>

#include "rare/riskdist.hpp"

namespace rare {

/// The five personalized shape parameters, in table order.
enum class PtParam : std::size_t { Alpha = 0, Beta, Lambda, Gamma, Delta };

inline constexpr std::size_t kNumPtParams = 5;

std::string_view to_string(PtParam p);

/// alpha: gain curvature, beta: loss curvature, lambda: gain attenuation,
/// gamma/delta: probability distortion for gains/losses. All in (0,1).
struct ProspectParams {
  double alpha = 0.5;
  double beta = 0.5;
  double lambda = 0.5;
  double gamma = 0.5;
  double delta = 0.5;

  bool valid() const;
  double& operator[](PtParam p);
  double operator[](PtParam p) const;
  bool operator==(const ProspectParams&) const = default;
};

enum class AblationMode {
  Full,
  NoValuePersonalization,  // value function uses global parameters only
  NoWeighting,             // pi(p) = p
  NoReference,             // x = price * tanh(r), gains only
};

/// "full", "no-vf", "no-wf", "no-rp"
std::string_view to_string(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view text);

/// price * tanh(rating - reference).
double outcome(int rating, double reference, double price);

/// lambda * x^alpha for x >= 0, -(-x)^beta otherwise.
double value(double x, const ProspectParams& params);

/// p^e / (p^e + (1-p)^e)^(1/e), exactly 0 at p=0 and 1 at p=1.
double weight(double p, double exponent);
double weight(double p, const ProspectParams& params, bool is_gain);

/// Outcomes with |x| below this are treated as exactly zero (value and
/// value-gradient both zero).
double kink_epsilon(double price);

/// Sum over the five rating states of value(x_i) * weight(p_i).
double prospect_value(const RatingDistribution& dist, double reference, double price,
                      const ProspectParams& params, AblationMode mode);

/// Prospect value with its partial derivatives with respect to each shape
/// parameter and the reference point.
struct ProspectPartials {
  double value = 0.0;
  std::array<double, kNumPtParams> d_param{};
  double d_reference = 0.0;
};

ProspectPartials prospect_value_partials(const RatingDistribution& dist, double reference,
                                         double price, const ProspectParams& params,
                                         AblationMode mode);

}  // namespace rare
