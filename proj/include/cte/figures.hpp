#pragma once

// Data behind the two figures: the closed-form normalised TE-rate surface of
// the refractory model (with an optional simulation overlay) and one
// annotated realisation of the Gaussian-elevation model.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cte/coarse.hpp"
#include "cte/core.hpp"
#include "cte/estimators.hpp"
#include "cte/models.hpp"
#include "cte/pathmeasure.hpp"
#include "cte/simulate.hpp"

namespace cte {

struct Fig1Row {
  double a;
  double lambda_y_tau;
  double normalized;  // TE rate / (a lambda_y)
  bool saturated;     // a within 1e-9 of 1: the value diverges
};

inline double figure1_normalized(double a, double lambda_y_tau) {
  return std::log(-std::log1p(-a) / (a * lambda_y_tau));
}

inline std::vector<Fig1Row> figure1_data(const std::vector<double>& a_values,
                                         const std::vector<double>& lyt_values) {
  std::vector<Fig1Row> rows;
  rows.reserve(a_values.size() * lyt_values.size());
  for (double a : a_values) {
    require(a > 0 && a <= 1, "a", "must lie in (0, 1]");
    for (double lyt : lyt_values) {
      require(lyt > 0 && std::isfinite(lyt), "lambda_y_tau", "must be > 0");
      if (a >= 1.0 - 1e-9)
        rows.push_back({a, lyt, std::numeric_limits<double>::infinity(), true});
      else
        rows.push_back({a, lyt, figure1_normalized(a, lyt), false});
    }
  }
  return rows;
}

struct Fig1Overlay {
  RefractoryModelParams params;
  double closed_form;     // normalised
  double estimate;        // normalised event-sum estimate
  double stderr_;
  std::size_t n_events;
};

// Event-sum estimate on one long simulated record, using the model's joint
// rate and its leading-order coarse rate.
inline Fig1Overlay figure1_overlay_point(const RefractoryModelParams& p, double duration,
                                         std::uint64_t seed) {
  p.validate();
  SimulationConfig cfg;
  cfg.duration = duration;
  cfg.seed = seed;
  const auto rec = simulate_coupled(RefractoryTarget{p}, RefractorySource{p}, cfg);
  const auto est = empirical_te_rate(rec, RefractoryTarget{p}, RefractoryCoarse{p},
                                     HistoryWindows::unbounded());
  const double norm = p.a * p.lambda_y;
  return {p, refractory_te_rate_closed_form(p).normalized, est.value / norm, est.stderr_ / norm,
          est.n_events};
}

enum class CoarseMethod { kMonteCarlo, kFilter };

struct Figure2Config {
  double grid_step = 0.01;
  CoarseMethod method = CoarseMethod::kMonteCarlo;
  MonteCarloConfig mc{};
  double filter_du = 0.005;
};

struct Fig2Sample {
  double t;
  double lambda_joint;
  double lambda_coarse;
  double nonspiking_rate;  // lambda_coarse - lambda_joint
  double log_ratio;        // jump a target spike at t would contribute
  double cumulative;       // pathwise TE, left limit at t
};

struct Figure2Data {
  GaussianModelParams params;
  std::uint64_t seed = 0;
  double duration = 0.0;
  CoarseMethod method = CoarseMethod::kMonteCarlo;
  HistoryWindows windows;
  JointSpikeRecord record;
  PathwiseTEResult te;
  std::vector<Fig2Sample> samples;
};

inline const char* to_string(CoarseMethod m) {
  return m == CoarseMethod::kMonteCarlo ? "monte-carlo" : "filter";
}

// One realisation on [0, duration) with no spikes before 0. The Monte Carlo
// coarse rate conditions on the last t_cut of target history, as in the
// paper's figure; the filter conditions on the whole past.
inline Figure2Data figure2_data(std::uint64_t seed, double duration,
                                const GaussianModelParams& p, const Figure2Config& cfg = {}) {
  p.validate();
  require(cfg.grid_step > 0, "grid_step", "must be > 0");
  Figure2Data out;
  out.params = p;
  out.seed = seed;
  out.duration = duration;
  out.method = cfg.method;
  SimulationConfig sc;
  sc.duration = duration;
  sc.seed = seed;
  const GaussianTarget joint{p};
  out.record = simulate_coupled(joint, gaussian_source(p), sc);

  TabulatedRate coarse;
  if (cfg.method == CoarseMethod::kMonteCarlo) {
    out.windows = HistoryWindows(p.t_cut, p.t_cut);
    MonteCarloConfig mc = cfg.mc;
    mc.seed = derive_key(seed, {0x666967ULL, mc.seed});
    coarse = coarse_rate_along_train(gaussian_marginal(p), out.record.x(), mc).rate;
  } else {
    out.windows = HistoryWindows::unbounded();
    coarse = filter_coarse_rate_along_train(p, out.record.x(), cfg.filter_du, cfg.filter_du);
  }
  PathOptions opt;
  opt.grid_step = cfg.grid_step;
  out.te = pathwise_te(joint, coarse, out.record, {0.0, duration}, out.windows, opt);

  const auto grid = detail::grid_points(0.0, duration, cfg.grid_step);
  const auto curve = cumulative_te_curve(out.te, grid);
  const auto xe = out.record.x().events();
  const auto ye = out.record.y().events();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const History hx = make_history(xe, 0.0, t, out.windows.s);
    const History hy = make_history(ye, 0.0, t, out.windows.r);
    const double lj = joint.rate(t, hx, hy);
    const double lc = coarse.rate(t, hx, hy);
    out.samples.push_back({t, lj, lc, lc - lj, std::log(lj / lc), curve[i].value});
  }
  return out;
}

}  // namespace cte
