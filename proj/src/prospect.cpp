#include "rare/prospect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rare {

namespace {

bool in_unit_open(double x) { return x > 0.0 && x < 1.0; }

// d pi / d e for p in (0,1).
double weight_exponent_derivative(double p, double e, double pi) {
  const double q = 1.0 - p;
  const double pe = std::pow(p, e);
  const double qe = std::pow(q, e);
  const double s = pe + qe;
  const double lp = std::log(p);
  const double lq = std::log(q);
  const double dlog = lp + std::log(s) / (e * e) - (pe * lp + qe * lq) / (e * s);
  return pi * dlog;
}

}  // namespace

std::string_view to_string(PtParam p) {
  switch (p) {
    case PtParam::Alpha: return "alpha";
    case PtParam::Beta: return "beta";
    case PtParam::Lambda: return "lambda";
    case PtParam::Gamma: return "gamma";
    case PtParam::Delta: return "delta";
  }
  return "unknown";
}

bool ProspectParams::valid() const {
  return in_unit_open(alpha) && in_unit_open(beta) && in_unit_open(lambda) &&
         in_unit_open(gamma) && in_unit_open(delta);
}

double& ProspectParams::operator[](PtParam p) {
  switch (p) {
    case PtParam::Alpha: return alpha;
    case PtParam::Beta: return beta;
    case PtParam::Lambda: return lambda;
    case PtParam::Gamma: return gamma;
    case PtParam::Delta: return delta;
  }
  throw std::out_of_range("bad PtParam");
}

double ProspectParams::operator[](PtParam p) const {
  return const_cast<ProspectParams&>(*this)[p];
}

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::Full: return "full";
    case AblationMode::NoValuePersonalization: return "no-vf";
    case AblationMode::NoWeighting: return "no-wf";
    case AblationMode::NoReference: return "no-rp";
  }
  return "unknown";
}

AblationMode parse_ablation_mode(std::string_view text) {
  if (text == "full") return AblationMode::Full;
  if (text == "no-vf") return AblationMode::NoValuePersonalization;
  if (text == "no-wf") return AblationMode::NoWeighting;
  if (text == "no-rp") return AblationMode::NoReference;
  throw std::invalid_argument("unknown mode '" + std::string(text) +
                              "' (expected full, no-vf, no-wf or no-rp)");
}

double outcome(int rating, double reference, double price) {
  return price * std::tanh(static_cast<double>(rating) - reference);
}

double value(double x, const ProspectParams& params) {
  if (x >= 0.0) return params.lambda * std::pow(x, params.alpha);
  return -std::pow(-x, params.beta);
}

double weight(double p, double e) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double pe = std::pow(p, e);
  return pe / std::pow(pe + std::pow(1.0 - p, e), 1.0 / e);
}

double weight(double p, const ProspectParams& params, bool is_gain) {
  return weight(p, is_gain ? params.gamma : params.delta);
}

double kink_epsilon(double price) { return 1e-6 * std::max(price, 1.0); }

double prospect_value(const RatingDistribution& dist, double reference, double price,
                      const ProspectParams& params, AblationMode mode) {
  return prospect_value_partials(dist, reference, price, params, mode).value;
}

ProspectPartials prospect_value_partials(const RatingDistribution& dist, double reference,
                                         double price, const ProspectParams& params,
                                         AblationMode mode) {
  if (!dist.valid(1e-6)) throw std::invalid_argument("invalid rating distribution");
  const auto idx = [](PtParam p) { return static_cast<std::size_t>(p); };
  const double eps = kink_epsilon(price);
  ProspectPartials out;

  for (std::size_t i = 0; i < kRatingLevels; ++i) {
    const int rating = static_cast<int>(i) + kMinRating;
    const double p = dist.p[i];
    const bool no_ref = mode == AblationMode::NoReference;
    const double t = std::tanh(static_cast<double>(rating) - (no_ref ? 0.0 : reference));
    const double x = price * t;
    if (std::abs(x) < eps || p <= 0.0) continue;

    // d x / d reference
    const double dx_dref = no_ref ? 0.0 : -price * (1.0 - t * t);

    double v, dv_dx;
    const bool gain = x > 0.0;
    if (gain) {
      const double xa = std::pow(x, params.alpha);
      const double lam = no_ref ? 1.0 : params.lambda;
      v = lam * xa;
      dv_dx = lam * params.alpha * xa / x;
    } else {
      const double xb = std::pow(-x, params.beta);
      v = -xb;
      dv_dx = params.beta * xb / (-x);
    }

    double w = p, dw_de = 0.0;
    if (mode != AblationMode::NoWeighting) {
      const double e = gain ? params.gamma : params.delta;
      w = weight(p, e);
      if (p < 1.0) dw_de = weight_exponent_derivative(p, e, w);
    }

    out.value += v * w;
    out.d_reference += w * dv_dx * dx_dref;
    if (gain) {
      const double lx = std::log(x);
      out.d_param[idx(PtParam::Alpha)] += w * v * lx;
      if (!no_ref) out.d_param[idx(PtParam::Lambda)] += w * v / params.lambda;
      out.d_param[idx(PtParam::Gamma)] += v * dw_de;
    } else {
      out.d_param[idx(PtParam::Beta)] += w * v * std::log(-x);
      out.d_param[idx(PtParam::Delta)] += v * dw_de;
    }
  }
  return out;
}

}  // namespace rare
