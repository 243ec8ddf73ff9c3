#pragma once

// Transfer entropy rate estimators: the event-sum estimator on one record, an
// ensemble over simulated records, and the discrete-time plug-in estimator on
// binarised records used to study the bin-width dependence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cte/core.hpp"
#include "cte/intensity.hpp"
#include "cte/parallel.hpp"
#include "cte/pathmeasure.hpp"
#include "cte/random.hpp"
#include "cte/simulate.hpp"

namespace cte {

struct RateEstimate {
  double value = 0.0;    // nats/s
  double stderr_ = 0.0;  // nats/s
  std::size_t n_events = 0;
  double duration = 0.0;
  std::string warning;
};

namespace detail {

inline std::pair<double, double> mean_and_stderr(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = pairwise_sum(v) / n;
  if (v.size() < 2) return {mean, 0.0};
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return {mean, std::sqrt(pairwise_sum(sq) / (n - 1.0) / n)};
}

}  // namespace detail

// (1/T) sum over target events of ln[joint / coarse]; stderr from batch
// means over equal time batches. Assumes a stationary, mixing process.
template <RateModel MJ, RateModel MC>
RateEstimate empirical_te_rate(const JointSpikeRecord& rec, const MJ& joint, const MC& coarse,
                               const HistoryWindows& windows, int batches = 20) {
  validate_joint_record(rec);
  require(batches >= 2, "batches", "must be >= 2");
  RateEstimate out;
  out.duration = rec.duration();
  const auto xe = rec.x().events();
  const auto ye = rec.y().events();
  const double rs = rec.start_time();
  out.n_events = xe.size();
  if (xe.empty()) {
    out.warning = "no target events";
    return out;
  }
  const History none{};
  std::vector<double> terms(xe.size());
  for (std::size_t i = 0; i < xe.size(); ++i) {
    const double t = xe[i];
    const History hx = make_history(xe, rs, t, windows.s);
    const double lj = joint.rate(t, hx, make_history(ye, rs, t, windows.r));
    const double lc = coarse.rate(t, hx, none);
    if (!(lj > 0) || !(lc > 0)) {
      std::ostringstream os;
      os.precision(12);
      os << "zero rate at target event t_i=" << t;
      throw Error(ErrorKind::kSingularRatio, os.str());
    }
    terms[i] = std::log(lj / lc);
  }
  out.value = pairwise_sum(terms) / out.duration;
  const double width = out.duration / batches;
  std::vector<double> rates(static_cast<std::size_t>(batches), 0.0);
  std::vector<std::vector<double>> per(static_cast<std::size_t>(batches));
  for (std::size_t i = 0; i < xe.size(); ++i) {
    auto b = static_cast<std::size_t>((xe[i] - rs) / width);
    b = std::min(b, per.size() - 1);
    per[b].push_back(terms[i]);
  }
  for (std::size_t b = 0; b < per.size(); ++b) rates[b] = pairwise_sum(per[b]) / width;
  out.stderr_ = detail::mean_and_stderr(rates).second;
  return out;
}

// Simulates n_paths records and averages the per-path event-sum estimates.
// `coarse_for(record)` returns the coarse rate model to use on that record.
template <RateModel MX, RateModel MY, class CoarseProvider>
RateEstimate ensemble_te_rate(const MX& x_model, const MY& y_model, int n_paths,
                              const SimulationConfig& base, const HistoryWindows& windows,
                              CoarseProvider&& coarse_for, int workers = 1) {
  require(n_paths >= 2, "n_paths", "must be >= 2");
  base.validate();
  std::vector<RateEstimate> per = parallel_map<RateEstimate>(
      static_cast<std::size_t>(n_paths), workers, [&](std::size_t i) {
        SimulationConfig cfg = base;
        cfg.seed = derive_key(base.seed, {0x656eULL, i});
        cfg.windows = windows;
        const JointSpikeRecord rec = simulate_coupled(x_model, y_model, cfg);
        return empirical_te_rate(rec, x_model, coarse_for(rec), windows);
      });
  std::vector<double> v;
  RateEstimate out;
  for (const auto& r : per) {
    v.push_back(r.value);
    out.n_events += r.n_events;
    out.duration += r.duration;
  }
  const auto [m, se] = detail::mean_and_stderr(v);
  out.value = m;
  out.stderr_ = se;
  return out;
}

// ------------------------------------------------------------ discrete time

struct DiscreteTEConfig {
  double dt = 0.01;
  int k = 1;
  int l = 1;

  static constexpr int kMaxHistoryBins = 20;

  void validate() const {
    require(dt > 0 && std::isfinite(dt), "dt", "must be > 0");
    require(k >= 1, "k", "must be >= 1");
    require(l >= 1, "l", "must be >= 1");
    require(k + l <= kMaxHistoryBins, "k+l",
            "history table of 2^(k+l+1) states is too large (k + l must be <= 20)");
  }
};

// floor(depth / dt) + 1 bins.
inline int history_bins(double depth, double dt) {
  require(depth > 0 && std::isfinite(depth), "depth", "must be finite and > 0");
  return static_cast<int>(std::floor(depth / dt + 1e-9)) + 1;
}

struct DiscreteTEResult {
  double te_per_bin = 0.0;  // nats
  std::size_t n_bins = 0;   // number of predicted bins
  std::size_t unseen_contexts = 0;
  std::size_t seen_contexts = 0;
};

// 1 iff at least one event in [t0 + i dt, t0 + (i+1) dt).
inline std::vector<std::uint8_t> binarize(std::span<const double> events, double t0, double dt,
                                          std::size_t n_bins) {
  std::vector<std::uint8_t> b(n_bins, 0);
  for (double e : events) {
    if (e < t0) continue;
    const auto i = static_cast<std::size_t>(std::floor((e - t0) / dt));
    if (i < n_bins) b[i] = 1;
  }
  return b;
}

// Plug-in TE y -> x per bin from binary sequences.
inline DiscreteTEResult discrete_te_binary(std::span<const std::uint8_t> x,
                                           std::span<const std::uint8_t> y, int k, int l) {
  require(x.size() == y.size(), "y", "binary sequences differ in length");
  const int hist = std::max(k, l);
  DiscreteTEResult out;
  if (x.size() <= static_cast<std::size_t>(hist)) return out;
  const std::size_t nctx = std::size_t{1} << (k + l);
  std::vector<std::uint32_t> joint(nctx * 2, 0);  // (xpast, ypast, next)
  const std::uint32_t kmask = (1u << k) - 1u, lmask = (1u << l) - 1u;
  std::uint32_t xp = 0, yp = 0;
  for (int i = 0; i < hist; ++i) {
    xp = ((xp << 1) | x[static_cast<std::size_t>(i)]) & kmask;
    yp = ((yp << 1) | y[static_cast<std::size_t>(i)]) & lmask;
  }
  for (std::size_t i = static_cast<std::size_t>(hist); i < x.size(); ++i) {
    const std::size_t ctx = (static_cast<std::size_t>(xp) << l) | yp;
    ++joint[ctx * 2 + x[i]];
    xp = ((xp << 1) | x[i]) & kmask;
    yp = ((yp << 1) | y[i]) & lmask;
  }
  out.n_bins = x.size() - static_cast<std::size_t>(hist);
  // Marginal over the source past.
  const std::size_t nx = std::size_t{1} << k;
  std::vector<std::uint64_t> marg(nx * 2, 0);
  for (std::size_t c = 0; c < nctx; ++c) {
    const std::size_t xc = c >> l;
    marg[xc * 2] += joint[c * 2];
    marg[xc * 2 + 1] += joint[c * 2 + 1];
  }
  std::vector<double> parts;
  for (std::size_t c = 0; c < nctx; ++c) {
    const double n0 = joint[c * 2], n1 = joint[c * 2 + 1];
    const double nc = n0 + n1;
    if (nc == 0) {
      ++out.unseen_contexts;
      continue;
    }
    ++out.seen_contexts;
    const std::size_t xc = c >> l;
    const double m0 = static_cast<double>(marg[xc * 2]);
    const double m1 = static_cast<double>(marg[xc * 2 + 1]);
    const double mc = m0 + m1;
    if (n0 > 0) parts.push_back(n0 * std::log((n0 / nc) / (m0 / mc)));
    if (n1 > 0) parts.push_back(n1 * std::log((n1 / nc) / (m1 / mc)));
  }
  out.te_per_bin = pairwise_sum(parts) / static_cast<double>(out.n_bins);
  return out;
}

// Plug-in TE per bin on [interval.t0, interval.t1) of a record.
inline DiscreteTEResult discrete_time_te(const JointSpikeRecord& rec, const DiscreteTEConfig& cfg,
                                         std::optional<TimeInterval> interval = std::nullopt) {
  cfg.validate();
  const TimeInterval iv = interval.value_or(TimeInterval{rec.start_time(), rec.end_time()});
  detail::check_interval(iv, rec.start_time(), rec.end_time());
  const auto n = static_cast<std::size_t>(std::floor((iv.t1 - iv.t0) / cfg.dt + 1e-9));
  const auto bx = binarize(rec.x().events(), iv.t0, cfg.dt, n);
  const auto by = binarize(rec.y().events(), iv.t0, cfg.dt, n);
  return discrete_te_binary(bx, by, cfg.k, cfg.l);
}

struct SurrogateTest {
  double observed = 0.0;
  double surrogate_mean = 0.0;
  double surrogate_sd = 0.0;
  double p_value = 1.0;  // (1 + #{surrogate >= observed}) / (1 + n)
  std::vector<double> surrogates;
};

// Null distribution from circular shifts of the binarised source by at
// least `min_shift` seconds.
inline SurrogateTest discrete_te_surrogates(const JointSpikeRecord& rec,
                                            const DiscreteTEConfig& cfg, int n_surrogates,
                                            double min_shift, std::uint64_t seed,
                                            int workers = 1) {
  cfg.validate();
  require(n_surrogates >= 1, "n_surrogates", "must be >= 1");
  const auto n = static_cast<std::size_t>(std::floor(rec.duration() / cfg.dt + 1e-9));
  const auto bx = binarize(rec.x().events(), rec.start_time(), cfg.dt, n);
  const auto by = binarize(rec.y().events(), rec.start_time(), cfg.dt, n);
  SurrogateTest out;
  out.observed = discrete_te_binary(bx, by, cfg.k, cfg.l).te_per_bin;
  const auto lo = static_cast<std::uint64_t>(std::ceil(min_shift / cfg.dt));
  require(2 * lo < n, "min_shift", "record too short for the requested shift");
  out.surrogates = parallel_map<double>(
      static_cast<std::size_t>(n_surrogates), workers, [&](std::size_t i) {
        CounterRng rng(seed, {0x73757272ULL, i});
        const std::uint64_t shift = lo + rng.uniform_index(n - 2 * lo);
        std::vector<std::uint8_t> ys(n);
        for (std::size_t j = 0; j < n; ++j) ys[(j + shift) % n] = by[j];
        return discrete_te_binary(bx, ys, cfg.k, cfg.l).te_per_bin;
      });
  const auto [m, se] = detail::mean_and_stderr(out.surrogates);
  out.surrogate_mean = m;
  out.surrogate_sd = se * std::sqrt(static_cast<double>(out.surrogates.size()));
  std::size_t ge = 0;
  for (double v : out.surrogates) ge += v >= out.observed;
  out.p_value = (1.0 + static_cast<double>(ge)) / (1.0 + static_cast<double>(n_surrogates));
  return out;
}

struct ConvergenceRow {
  double dt;
  int k;
  int l;
  double te_per_bin;
  double te_per_time;  // te_per_bin / dt
  std::size_t unseen_contexts;
};

// One row per bin width; k and l come from the supplied rules.
inline std::vector<ConvergenceRow> discrete_rate_convergence(
    const JointSpikeRecord& rec, std::span<const double> dt_list,
    const std::function<int(double)>& k_of_dt, const std::function<int(double)>& l_of_dt,
    int workers = 1) {
  for (std::size_t i = 1; i < dt_list.size(); ++i)
    require(dt_list[i] < dt_list[i - 1], "dt_list", "must be strictly decreasing");
  std::vector<DiscreteTEConfig> cfgs;
  for (double dt : dt_list) {
    DiscreteTEConfig c{dt, k_of_dt(dt), l_of_dt(dt)};
    c.validate();
    cfgs.push_back(c);
  }
  return parallel_map<ConvergenceRow>(cfgs.size(), workers, [&](std::size_t i) {
    const auto r = discrete_time_te(rec, cfgs[i]);
    return ConvergenceRow{cfgs[i].dt, cfgs[i].k, cfgs[i].l, r.te_per_bin,
                          r.te_per_bin / cfgs[i].dt, r.unseen_contexts};
  });
}

}  // namespace cte
