#pragma once

// Concrete intensity models: the refractory source/target pair with its
// leading-order closed forms, and the Gaussian-elevation target driven by a
// Poisson source.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "cte/core.hpp"
#include "cte/intensity.hpp"

namespace cte {

struct RefractoryModelParams {
  double lambda_y = 0.1;  // source base rate
  double a = 0.5;         // spike probability within the elevated window
  double tau = 1.0;       // elevated window length
  double tau_r = 1.5;     // refractory period, >= tau

  void validate() const {
    require(lambda_y >= 0 && std::isfinite(lambda_y), "lambda_y", "must be finite and >= 0");
    require(a > 0 && a < 1, "a", "must lie in (0, 1)");
    require(tau > 0 && std::isfinite(tau), "tau", "must be > 0");
    require(tau_r >= tau && std::isfinite(tau_r), "tau_r", "must be >= tau");
  }

  // -ln(1 - a) / tau, via log1p for small a.
  double elevated_rate() const { return -std::log1p(-a) / tau; }
};

struct GaussianModelParams {
  double lambda_base = 0.5;
  double m = 5.0;
  double sigma = 0.1;
  double t_cut = 1.0;
  double lambda_y = 1.0;

  void validate() const {
    require(lambda_base > 0 && std::isfinite(lambda_base), "lambda_base", "must be > 0");
    // m = 0 is allowed: it switches the source coupling off.
    require(m >= 0 && std::isfinite(m), "m", "must be >= 0");
    require(sigma > 0 && std::isfinite(sigma), "sigma", "must be > 0");
    require(t_cut > 0 && std::isfinite(t_cut), "t_cut", "must be > 0");
    require(lambda_y >= 0 && std::isfinite(lambda_y), "lambda_y", "must be >= 0");
  }
};

struct JointRates {
  double lambda_x_given_y;
  double lambda_y_given_x;
};

// Piecewise refractory rates. Absent last-spike times mean no spike in the
// relevant past.
inline JointRates refractory_joint_rates(const RefractoryModelParams& p, double t,
                                         std::optional<double> last_x,
                                         std::optional<double> last_y) {
  JointRates r{0.0, 0.0};
  r.lambda_y_given_x = (!last_y || t > *last_y + p.tau_r) ? p.lambda_y : 0.0;
  if (last_y && *last_y < t && t <= *last_y + p.tau &&
      (!last_x || (*last_x <= *last_y && t > *last_x + p.tau_r)))
    r.lambda_x_given_y = p.elevated_rate();
  return r;
}

struct CoarseRateValue {
  double rate;
  // False when the two most recent target spikes are closer than
  // tau_r + tau, where the single-spike form is not accurate.
  bool valid = true;
};

// Leading-order coarse target rate as a function of the time since the last
// target spike (nullopt: no prior target spike).
inline double refractory_coarse_rate(const RefractoryModelParams& p,
                                     std::optional<double> dt_since_last_x) {
  const double plateau = p.a * p.lambda_y;
  if (!dt_since_last_x) return plateau;
  const double dt = *dt_since_last_x;
  if (dt < p.tau_r) return 0.0;
  if (dt < p.tau_r + p.tau)
    return -std::expm1(std::log1p(-p.a) * (dt - p.tau_r) / p.tau) * p.lambda_y;
  return plateau;
}

inline CoarseRateValue refractory_coarse_rate(const RefractoryModelParams& p, double t,
                                              const History& target) {
  CoarseRateValue v{0.0, true};
  const auto last = target.last();
  v.rate = refractory_coarse_rate(p, last ? std::optional<double>(t - *last) : std::nullopt);
  if (const auto prev = target.second_last(); prev && *last - *prev < p.tau_r + p.tau)
    v.valid = false;
  return v;
}

struct ClosedFormTeRate {
  double rate;        // nats/s
  double normalized;  // rate / (a * lambda_y)
  // The leading-order form assumes a*lambda_y*tau < -ln(1-a); outside that
  // regime the value is negative and this flag is cleared.
  bool in_regime;
};

inline ClosedFormTeRate refractory_te_rate_closed_form(const RefractoryModelParams& p) {
  const double mean_rate = p.a * p.lambda_y;
  const double normalized = std::log(-std::log1p(-p.a) / (mean_rate * p.tau));
  return {mean_rate * normalized, normalized, mean_rate * p.tau < -std::log1p(-p.a)};
}

// Target rate as a function of the time since the last source spike.
inline double gaussian_target_rate(const GaussianModelParams& p, std::optional<double> t_y1) {
  if (!t_y1 || !(*t_y1 > 0.0) || *t_y1 > p.t_cut) return p.lambda_base;
  const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
  const double d = *t_y1 - 0.5 * p.t_cut;
  const double h = 0.5 * p.t_cut;
  return p.lambda_base + p.m * std::exp(-d * d * inv) - p.m * std::exp(-h * h * inv);
}

// x channel of the refractory model: rate(t, x history, y history).
struct RefractoryTarget {
  RefractoryModelParams params;

  double rate(double t, const History& own, const History& other) const {
    return refractory_joint_rates(params, t, own.last(), other.last()).lambda_x_given_y;
  }
  std::optional<double> upper_bound() const { return params.elevated_rate(); }
  void breakpoints(double t, const History& own, const History& other, double horizon,
                   std::vector<double>& out) const {
    const auto push = [&](double b) {
      if (b > t && b <= horizon) out.push_back(b);
    };
    if (const auto ly = other.last()) push(*ly + params.tau);
    if (const auto lx = own.last()) push(*lx + params.tau_r);
  }
};

// y channel of the refractory model: rate(t, y history, x history).
struct RefractorySource {
  RefractoryModelParams params;

  double rate(double t, const History& own, const History&) const {
    const auto ly = own.last();
    return (!ly || t > *ly + params.tau_r) ? params.lambda_y : 0.0;
  }
  std::optional<double> upper_bound() const { return params.lambda_y; }
  void breakpoints(double t, const History& own, const History&, double horizon,
                   std::vector<double>& out) const {
    if (const auto ly = own.last(); ly && *ly + params.tau_r > t && *ly + params.tau_r <= horizon)
      out.push_back(*ly + params.tau_r);
  }
};

// Leading-order coarse rate of the refractory target as an intensity over the
// target history only.
struct RefractoryCoarse {
  RefractoryModelParams params;

  double rate(double t, const History& own, const History&) const {
    const auto lx = own.last();
    return refractory_coarse_rate(params, lx ? std::optional<double>(t - *lx) : std::nullopt);
  }
  std::optional<double> upper_bound() const { return params.a * params.lambda_y; }
  void breakpoints(double t, const History& own, const History&, double horizon,
                   std::vector<double>& out) const {
    if (const auto lx = own.last()) {
      for (double b : {*lx + params.tau_r, *lx + params.tau_r + params.tau})
        if (b > t && b <= horizon) out.push_back(b);
    }
  }
};

// Integral over u in [u1, u2] (a sub-range of [0, t_cut]) of the rate above
// baseline.
inline double gaussian_excess_integral(const GaussianModelParams& p, double u1, double u2) {
  if (!(u2 > u1)) return 0.0;
  const double h = 0.5 * p.t_cut;
  const double k = 1.0 / (p.sigma * std::sqrt(2.0));
  const double bump = p.m * p.sigma * std::sqrt(std::numbers::pi / 2.0) *
                      (std::erf((u2 - h) * k) - std::erf((u1 - h) * k));
  return bump - p.m * std::exp(-h * h * k * k) * (u2 - u1);
}

// Target of the Gaussian-elevation model: depends only on the time since the
// last source spike.
struct GaussianTarget {
  GaussianModelParams params;

  double rate(double t, const History&, const History& other) const {
    const auto ly = other.last();
    return gaussian_target_rate(params, ly ? std::optional<double>(t - *ly) : std::nullopt);
  }
  double integral(double a, double b, const History&, const History& other) const {
    if (!(b > a)) return 0.0;
    double v = params.lambda_base * (b - a);
    if (const auto ly = other.last()) {
      const double lo = std::max(a, *ly);
      const double hi = std::min(b, *ly + params.t_cut);
      if (hi > lo) v += gaussian_excess_integral(params, lo - *ly, hi - *ly);
    }
    return v;
  }
  std::optional<double> upper_bound() const { return params.lambda_base + params.m; }
  void breakpoints(double t, const History&, const History& other, double horizon,
                   std::vector<double>& out) const {
    if (const auto ly = other.last(); ly && *ly + params.t_cut > t && *ly + params.t_cut <= horizon)
      out.push_back(*ly + params.t_cut);
  }
};

// Homogeneous Poisson source (the Gaussian model's y channel).
inline ConstantRate gaussian_source(const GaussianModelParams& p) { return {p.lambda_y}; }

// Ordered, de-duplicated non-smooth points of t -> rate(t) on (t, horizon].
template <RateModel M>
std::vector<double> rate_breakpoints(const M& model, double t, const History& own,
                                     const History& other, double horizon) {
  std::vector<double> out;
  model.breakpoints(t, own, other, horizon, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <RateModel M>
double rate_upper_bound(const M& model) {
  const auto b = model.upper_bound();
  if (!b) throw Error(ErrorKind::kMissingBound, "model cannot bound its rate");
  return *b;
}

}  // namespace cte
