#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature for piecewise-smooth integrands.
// Only interior nodes are evaluated, so a segment endpoint may be a jump of
// the integrand without affecting the result.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "cte/core.hpp"
#include "cte/parallel.hpp"

namespace cte {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  bool converged = true;
  double worst_a = 0.0;  // sub-segment with the largest unresolved error
  double worst_b = 0.0;
  double worst_error = 0.0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F& f, double a, double b, double& kronrod, double& gauss) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kKronrodWeights[7];
  double g = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kKronrodNodes[j];
    const double s = f(c - dx) + f(c + dx);
    k += kKronrodWeights[j] * s;
    if (j % 2 == 1) g += kGaussWeights[j / 2] * s;
  }
  kronrod = k * h;
  gauss = g * h;
}

template <class F>
void adapt(F& f, double a, double b, double tol, int depth, int max_depth,
           QuadratureResult& out, std::vector<double>& parts) {
  double k = 0.0, g = 0.0;
  gk15(f, a, b, k, g);
  const double err = std::abs(k - g);
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(k);
  const double accept = std::max(tol, roundoff);
  if (err <= accept || depth >= max_depth || !(b - a > 1e-13 * std::max(1.0, std::abs(a)))) {
    if (err > accept) {
      out.converged = false;
      if (err > out.worst_error) {
        out.worst_error = err;
        out.worst_a = a;
        out.worst_b = b;
      }
    }
    out.error += err;
    parts.push_back(k);
    return;
  }
  const double m = 0.5 * (a + b);
  adapt(f, a, m, 0.5 * tol, depth + 1, max_depth, out, parts);
  adapt(f, m, b, 0.5 * tol, depth + 1, max_depth, out, parts);
}

}  // namespace detail

// Integrates a smooth f over [a, b] to absolute error `abs_tol`.
template <class F>
QuadratureResult integrate_smooth(F&& f, double a, double b, double abs_tol,
                                  int max_depth = 40) {
  QuadratureResult out;
  if (!(b > a)) return out;
  std::vector<double> parts;
  detail::adapt(f, a, b, abs_tol, 0, max_depth, out, parts);
  out.value = pairwise_sum(parts);
  return out;
}

// Integrates over [a, b] split at `cuts` (any order, duplicates allowed,
// points outside (a, b) ignored). `tol_per_time` scales with segment length.
template <class F>
QuadratureResult integrate_piecewise(F&& f, double a, double b, std::vector<double> cuts,
                                     double tol_per_time) {
  QuadratureResult total;
  if (!(b > a)) return total;
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                            [&](double c) { return !(c > a && c < b); }),
             cuts.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> parts;
  parts.reserve(cuts.size() + 1);
  double lo = a;
  auto one = [&](double l, double h) {
    const auto r = integrate_smooth(f, l, h, tol_per_time * (h - l));
    parts.push_back(r.value);
    total.error += r.error;
    if (!r.converged && r.worst_error > total.worst_error) {
      total.worst_error = r.worst_error;
      total.converged = false;
      total.worst_a = r.worst_a;
      total.worst_b = r.worst_b;
    }
  };
  for (double c : cuts) {
    one(lo, c);
    lo = c;
  }
  one(lo, b);
  total.value = pairwise_sum(parts);
  return total;
}

}  // namespace cte
