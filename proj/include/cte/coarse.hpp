#pragma once

// Coarse-grained (source-marginalised) target rate. The Monte Carlo scheme
// sums over source spike counts with sorted-uniform spike placements and the
// phase-space volume weight; the filter is an independent discretised
// posterior over the time since the last source spike (Gaussian model only).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "cte/core.hpp"
#include "cte/intensity.hpp"
#include "cte/models.hpp"
#include "cte/parallel.hpp"
#include "cte/pathmeasure.hpp"
#include "cte/random.hpp"

namespace cte {

// I_n(t0, t) = (t - t0)^n / n!, volume of ordered n-tuples in [t0, t).
inline double phase_space_volume(int n, double t0, double t) {
  require(n >= 0, "n", "must be >= 0");
  require(t >= t0, "t", "must be >= t0");
  if (n == 0) return 1.0;
  return std::exp(n * std::log(t - t0) - std::lgamma(n + 1.0));
}

struct MonteCarloConfig {
  int k_max = 12;            // hard cap on the source spike count
  double tol_k = 1e-4;       // stop once a term's relative size drops below this
  int n_samples = 1000;      // N, placements per spike count
  double dt_int = 1e-3;      // reporting grid along a train
  double dtau_interp = 0.02;  // interpolation grid
  int n_x_precompute = 2;    // largest in-window count with a shared table
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    require(k_max >= 0, "k_max", "must be >= 0");
    require(tol_k > 0, "tol_k", "must be > 0");
    require(n_samples >= 1, "n_samples", "must be >= 1");
    require(dt_int > 0, "dt_int", "must be > 0");
    require(dtau_interp >= dt_int, "dtau_interp", "must be >= dt_int");
    require(n_x_precompute >= 0 && n_x_precompute <= 2, "n_x_precompute", "must be 0, 1 or 2");
    require(workers >= 1, "workers", "must be >= 1");
  }
};

struct CoarseRateEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int terms_used = 0;
  double tail_bound = 0.0;  // relative size of the last included term
  bool truncated = false;   // k_max reached before tol_k
};

// Target driven by a homogeneous Poisson source whose influence lasts at most
// `horizon` (t_cut for the Gaussian model). The scheme conditions on target
// events in [t - horizon, t) and samples source paths on [t - 2 horizon, t).
template <RateModel M>
struct PoissonDrivenTarget {
  M target;
  double lambda_y;
  double horizon;
};

inline PoissonDrivenTarget<GaussianTarget> gaussian_marginal(const GaussianModelParams& p) {
  p.validate();
  return {GaussianTarget{p}, p.lambda_y, p.t_cut};
}

namespace detail {

// log p(x on [lo_x, t) | y) and lambda(t | y) for fixed target window events.
template <RateModel M>
std::pair<double, double> conditional_target_terms(const PoissonDrivenTarget<M>& model,
                                                   std::span<const double> xw,
                                                   std::span<const double> yw, double lo_y,
                                                   double lo_x, double t) {
  const double h = model.horizon;
  double logl = 0.0;
  for (std::size_t i = 0; i < xw.size(); ++i) {
    const double e = xw[i];
    const double v = model.target.rate(e, make_history(xw, lo_x, e, h), make_history(yw, lo_y, e, h));
    if (!(v > 0)) return {-std::numeric_limits<double>::infinity(), 0.0};
    logl += std::log(v);
  }
  std::vector<double> pts;
  add_structural_points(xw, h, lo_x, t, pts);
  add_structural_points(yw, h, lo_x, t, pts);
  pts = finish_points(std::move(pts), lo_x, t);
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    const double m = 0.5 * (a + b);
    const auto q = segment_integral(model.target, a, b, make_history(xw, lo_x, m, h),
                                    make_history(yw, lo_y, m, h), 1e-10);
    integral += q.value;
  }
  logl -= integral;
  const double rate_t =
      model.target.rate(t, make_history(xw, lo_x, t, h), make_history(yw, lo_y, t, h));
  return {logl, rate_t};
}

inline double poisson_log_pmf(int n, double mean) {
  if (mean <= 0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return n * std::log(mean) - mean - std::lgamma(n + 1.0);
}

// Core estimator with explicit window events `xw` (all in [lo_x, t]).
template <RateModel M>
CoarseRateEstimate mc_core(const PoissonDrivenTarget<M>& model, std::span<const double> xw,
                           double t, double lo_x, double lo_y, const MonteCarloConfig& cfg) {
  const double w = t - lo_y;
  const double mean = model.lambda_y * w;
  const int nsamp = cfg.n_samples;

  // Reference log-likelihood (empty source path) keeps exponentials in range.
  const auto ref = conditional_target_terms(model, xw, {}, lo_y, lo_x, t);
  const double shift = std::isfinite(ref.first) ? ref.first : 0.0;

  double a_tot = 0.0, b_tot = 0.0;
  std::vector<double> a_terms, b_terms;          // per-term means
  std::vector<std::vector<double>> a_s, b_s;     // per-term samples
  CoarseRateEstimate est;
  bool stopped = false;
  for (int n = 0; n <= cfg.k_max; ++n) {
    const double lc = poisson_log_pmf(n, mean);
    std::vector<double> av(static_cast<std::size_t>(n == 0 ? 1 : nsamp));
    std::vector<double> bv(av.size());
    if (std::isfinite(lc)) {
      const double c = std::exp(lc);
      parallel_for(av.size(), cfg.workers, [&](std::size_t j) {
        std::vector<double> y(static_cast<std::size_t>(n));
        CounterRng rng(cfg.seed, {0x6d63ULL, static_cast<std::uint64_t>(n), j});
        for (auto& v : y) v = lo_y + w * rng.uniform();
        std::sort(y.begin(), y.end());
        const auto [logl, lam] = conditional_target_terms(model, xw, y, lo_y, lo_x, t);
        const double lw = std::isfinite(logl) ? c * std::exp(logl - shift) : 0.0;
        bv[j] = lw;
        av[j] = lw * lam;
      });
    } else {
      std::fill(av.begin(), av.end(), 0.0);
      std::fill(bv.begin(), bv.end(), 0.0);
    }
    const double am = pairwise_sum(av) / static_cast<double>(av.size());
    const double bm = pairwise_sum(bv) / static_cast<double>(bv.size());
    a_terms.push_back(am);
    b_terms.push_back(bm);
    a_s.push_back(std::move(av));
    b_s.push_back(std::move(bv));
    a_tot = pairwise_sum(a_terms);
    b_tot = pairwise_sum(b_terms);
    est.terms_used = n + 1;
    const double rel = b_tot > 0 ? std::max(bm / b_tot, a_tot > 0 ? am / a_tot : 0.0) : 1.0;
    est.tail_bound = rel;
    // Terms past the Poisson mode only shrink; stop once they are negligible.
    if (n >= 1 && n >= mean && rel < cfg.tol_k) {
      stopped = true;
      break;
    }
    if (mean == 0.0) {
      stopped = true;
      break;
    }
  }
  est.truncated = !stopped;
  if (!(b_tot > 0) || !std::isfinite(b_tot))
    throw Error(ErrorKind::kInsufficientSamples,
                "coarse-rate denominator is zero; increase n_samples");
  est.value = a_tot / b_tot;
  // Delta method: Var(A - R B) summed over independent terms.
  double var = 0.0;
  for (std::size_t n = 0; n < a_s.size(); ++n) {
    const auto& av = a_s[n];
    const auto& bv = b_s[n];
    if (av.size() < 2) continue;
    std::vector<double> d(av.size());
    for (std::size_t j = 0; j < av.size(); ++j) d[j] = av[j] - est.value * bv[j];
    const double dm = pairwise_sum(d) / static_cast<double>(d.size());
    std::vector<double> sq(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) sq[j] = (d[j] - dm) * (d[j] - dm);
    var += pairwise_sum(sq) / static_cast<double>(d.size() - 1) / static_cast<double>(d.size());
  }
  est.stderr_ = std::sqrt(var) / b_tot;
  return est;
}

}  // namespace detail

// Coarse rate at t given target events before t (only those in
// [t - horizon, t) matter). Time before `record_start` is empty for both
// channels.
template <RateModel M>
CoarseRateEstimate mc_coarse_rate(const PoissonDrivenTarget<M>& model,
                                  std::span<const double> target_history, double t,
                                  const MonteCarloConfig& cfg,
                                  double record_start = -kUnbounded) {
  cfg.validate();
  require(model.lambda_y >= 0, "lambda_y", "must be >= 0");
  require(model.horizon > 0, "horizon", "must be > 0");
  require(std::is_sorted(target_history.begin(), target_history.end()), "target_history",
          "must be sorted");
  const double lo_x = std::max(t - model.horizon, record_start);
  const double lo_y = std::max(t - 2.0 * model.horizon, record_start);
  const auto b = std::lower_bound(target_history.begin(), target_history.end(), lo_x);
  const auto e = std::lower_bound(target_history.begin(), target_history.end(), t);
  std::vector<double> xw(b, e);
  return detail::mc_core(model, xw, t, lo_x, lo_y, cfg);
}

// Shared tables for in-window counts 0..n_x, indexed by spike offsets
// d = t - t^x on a grid from dt_int to horizon.
class InterpolationTable {
 public:
  InterpolationTable() = default;

  template <RateModel M>
  InterpolationTable(const PoissonDrivenTarget<M>& model, const MonteCarloConfig& cfg)
      : n_x_(cfg.n_x_precompute), horizon_(model.horizon) {
    cfg.validate();
    for (double d = model.horizon; d > cfg.dt_int * (1.0 + 1e-9); d -= cfg.dtau_interp)
      grid_.push_back(d);
    grid_.push_back(cfg.dt_int);
    std::reverse(grid_.begin(), grid_.end());
    // Stationary reference time with a full source window.
    const double t = 2.0 * model.horizon;
    const std::size_t g = grid_.size();
    struct Job {
      int n;
      std::size_t i, j;
    };
    std::vector<Job> jobs;
    jobs.push_back({0, 0, 0});
    if (n_x_ >= 1)
      for (std::size_t i = 0; i < g; ++i) jobs.push_back({1, i, 0});
    if (n_x_ >= 2)
      for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = i; j < g; ++j) jobs.push_back({2, i, j});
    MonteCarloConfig inner = cfg;
    inner.workers = 1;
    const auto res = parallel_map<CoarseRateEstimate>(
        jobs.size(), cfg.workers, [&](std::size_t q) {
          const Job& jb = jobs[q];
          std::vector<double> xw;
          if (jb.n == 2) xw.push_back(t - grid_[jb.j]);
          if (jb.n >= 1) xw.push_back(t - grid_[jb.i]);
          return detail::mc_core(model, xw, t, t - model.horizon, 0.0, inner);
        });
    empty_ = res[0];
    one_.assign(res.begin() + 1, res.begin() + 1 + (n_x_ >= 1 ? static_cast<long>(g) : 0));
    if (n_x_ >= 2) {
      two_.assign(g * g, {});
      std::size_t q = 1 + g;
      for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = i; j < g; ++j, ++q) {
          two_[i * g + j] = res[q];
          two_[j * g + i] = res[q];
        }
    }
  }

  int max_count() const { return n_x_; }
  std::span<const double> offsets() const { return grid_; }
  const CoarseRateEstimate& empty_entry() const { return empty_; }
  std::span<const CoarseRateEstimate> one_spike() const { return one_; }
  const CoarseRateEstimate& two_spike(std::size_t i, std::size_t j) const {
    return two_[i * grid_.size() + j];
  }

  // Linear (bilinear for two spikes) interpolation; offsets are clamped to
  // the grid. Returns value and stderr.
  std::pair<double, double> lookup(std::span<const double> offsets) const {
    if (offsets.empty()) return {empty_.value, empty_.stderr_};
    if (offsets.size() == 1) {
      const auto [i, w] = locate(offsets[0]);
      const auto& lo = one_[i];
      const auto& hi = one_[std::min(i + 1, one_.size() - 1)];
      return {lo.value + w * (hi.value - lo.value), lo.stderr_ + w * (hi.stderr_ - lo.stderr_)};
    }
    if (offsets.size() == 2) {
      const auto [i, wi] = locate(offsets[0]);
      const auto [j, wj] = locate(offsets[1]);
      const std::size_t g = grid_.size();
      const std::size_t i1 = std::min(i + 1, g - 1), j1 = std::min(j + 1, g - 1);
      auto mix = [&](auto get) {
        const double v00 = get(two_spike(i, j)), v10 = get(two_spike(i1, j));
        const double v01 = get(two_spike(i, j1)), v11 = get(two_spike(i1, j1));
        return (1 - wi) * (1 - wj) * v00 + wi * (1 - wj) * v10 + (1 - wi) * wj * v01 +
               wi * wj * v11;
      };
      return {mix([](const CoarseRateEstimate& e) { return e.value; }),
              mix([](const CoarseRateEstimate& e) { return e.stderr_; })};
    }
    throw Error(ErrorKind::kDomain, "interpolation table holds at most two spikes");
  }

 private:
  std::pair<std::size_t, double> locate(double d) const {
    if (d <= grid_.front()) return {0, 0.0};
    if (d >= grid_.back()) return {grid_.size() - 1, 0.0};
    const auto k = static_cast<std::size_t>(
        std::upper_bound(grid_.begin(), grid_.end(), d) - grid_.begin() - 1);
    return {k, (d - grid_[k]) / (grid_[k + 1] - grid_[k])};
  }

  int n_x_ = 0;
  double horizon_ = 0.0;
  std::vector<double> grid_;
  CoarseRateEstimate empty_;
  std::vector<CoarseRateEstimate> one_;
  std::vector<CoarseRateEstimate> two_;
};

template <RateModel M>
InterpolationTable interpolation_table(const PoissonDrivenTarget<M>& model,
                                       const MonteCarloConfig& cfg) {
  return InterpolationTable(model, cfg);
}

struct CoarseRateSample {
  double t;
  double rate;
  double stderr_;
};

struct CoarseRateTrack {
  std::vector<CoarseRateSample> samples;  // on the dt_int grid
  TabulatedRate rate;                     // cadlag-consistent interpolant
  std::vector<double> partition;          // interval boundaries
};

// Coarse rate along a target train: the time axis is cut wherever a spike
// enters or leaves the window; intervals with a full source window and at
// most n_x spikes read the shared table, others get their own 1-D table in
// the time since the interval start.
template <RateModel M>
CoarseRateTrack coarse_rate_along_train(const PoissonDrivenTarget<M>& model,
                                        const SpikeTrain& train, const MonteCarloConfig& cfg) {
  cfg.validate();
  const double h = model.horizon;
  const double t0 = train.start_time(), t1 = train.end_time();
  const auto ev = train.events();
  const InterpolationTable table(model, cfg);

  std::vector<double> pts;
  detail::add_structural_points(ev, h, t0, t1, pts);
  if (t0 + 2 * h < t1) pts.push_back(t0 + 2 * h);
  pts = detail::finish_points(std::move(pts), t0, t1);

  // Per-interval evaluation plans.
  struct Interval {
    double a, b;
    std::vector<double> events;  // in-window events for t in (a, b]
    bool use_table;
    std::vector<double> nodes;   // node times for the local table
    std::size_t first_job = 0;
  };
  std::vector<Interval> iv;
  struct Job {
    std::size_t interval;
    double t;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    Interval in;
    in.a = pts[k];
    in.b = pts[k + 1];
    const double mid = 0.5 * (in.a + in.b);
    const History hw = make_history(ev, t0, mid, h);
    in.events.assign(hw.events.begin(), hw.events.end());
    in.use_table = in.a >= t0 + 2 * h - 1e-12 &&
                   static_cast<int>(in.events.size()) <= table.max_count();
    if (!in.use_table) {
      const auto nq = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil((in.b - in.a) / cfg.dtau_interp)));
      in.first_job = jobs.size();
      for (std::size_t q = 0; q <= nq; ++q) {
        const double t = in.a + (in.b - in.a) * static_cast<double>(q) / static_cast<double>(nq);
        in.nodes.push_back(t);
        jobs.push_back({iv.size(), t});
      }
    }
    iv.push_back(std::move(in));
  }
  MonteCarloConfig inner = cfg;
  inner.workers = 1;
  const auto res = parallel_map<CoarseRateEstimate>(jobs.size(), cfg.workers, [&](std::size_t q) {
    const Interval& in = iv[jobs[q].interval];
    const double t = jobs[q].t;
    return detail::mc_core(model, in.events, t, std::max(t - h, t0), std::max(t - 2 * h, t0),
                           inner);
  });

  // Value inside interval `in` at t in [a, b] (a meaning the right limit).
  auto eval = [&](const Interval& in, double t) -> std::pair<double, double> {
    if (in.use_table) {
      std::vector<double> off;
      for (auto it = in.events.rbegin(); it != in.events.rend(); ++it) off.push_back(t - *it);
      return table.lookup(off);
    }
    const auto& nd = in.nodes;
    const auto k = std::min<std::size_t>(
        nd.size() - 2 + (nd.size() == 1),
        static_cast<std::size_t>(std::upper_bound(nd.begin(), nd.end(), t) - nd.begin()) -
            (t > nd.front() ? 1 : 0));
    const auto& lo = res[in.first_job + k];
    if (nd.size() == 1) return {lo.value, lo.stderr_};
    const auto& hi = res[in.first_job + k + 1];
    const double w = std::clamp((t - nd[k]) / (nd[k + 1] - nd[k]), 0.0, 1.0);
    return {lo.value + w * (hi.value - lo.value), lo.stderr_ + w * (hi.stderr_ - lo.stderr_)};
  };

  CoarseRateTrack out;
  out.partition = pts;
  std::vector<TabulatedRate::Knot> knots;
  for (std::size_t k = 0; k < iv.size(); ++k) {
    const Interval& in = iv[k];
    const double right = eval(in, in.a).first;
    if (k == 0)
      knots.push_back({in.a, right, right});
    else
      knots.back().right = right;
    const auto g0 = static_cast<long long>(std::floor((in.a - t0) / cfg.dt_int)) + 1;
    for (long long g = std::max(0LL, g0);; ++g) {
      const double t = t0 + static_cast<double>(g) * cfg.dt_int;
      if (!(t < in.b)) break;
      if (!(t > in.a)) continue;
      const auto v = eval(in, t);
      knots.push_back({t, v.first, v.first});
    }
    const double left = eval(in, in.b).first;
    knots.push_back({in.b, left, left});
  }
  out.rate = TabulatedRate(std::move(knots));
  // Samples: the value at t is the left limit, so t belongs to (a, b].
  std::size_t k = 0;
  for (long long g = 0;; ++g) {
    const double t = t0 + static_cast<double>(g) * cfg.dt_int;
    if (!(t < t1)) break;
    while (k + 1 < iv.size() && t > iv[k].b) ++k;
    const Interval& in = iv[k];
    const auto v = (t <= in.a) ? eval(in, in.a) : eval(in, t);
    out.samples.push_back({t, v.first, v.second});
  }
  return out;
}

// ------------------------------------------------------------------ filter

// Posterior over u = time since the last source spike for the Gaussian
// model, on a time lattice of step du. A source spike in a step is placed at
// its midpoint; states older than t_cut merge into a quiet state with the
// baseline rate. Target events in [t_k, t_k + du) are weighed in step k.
class GaussianFilter {
 public:
  GaussianFilter(const GaussianModelParams& p, double du, double start)
      : p_(p), du_(du), t_(start), start_(start) {
    p.validate();
    require(du > 0 && du <= p.sigma / 5.0 * (1.0 + 1e-12), "grid_du",
            "must lie in (0, sigma/5]");
    n_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p.t_cut / du - 0.5)));
    w_.assign(n_, 0.0);
    lam_.resize(n_);
    decay_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double u = age(j);
      lam_[j] = gaussian_target_rate(p, u);
      decay_[j] = std::exp(-exact(u, u + du));
    }
    quiet_decay_ = std::exp(-p.lambda_base * du);
    reset_p_ = -std::expm1(-p.lambda_y * du);
    newborn_decay_ = std::exp(-exact(0.0, 0.5 * du));
  }

  double time() const { return t_; }
  double step_size() const { return du_; }
  // Log of the accumulated normalisation: minus the integrated coarse rate
  // plus the log coarse rates at weighed events.
  double log_normalizer() const { return log_z_; }

  // One lattice step; `offsets` are the events' offsets in [0, du).
  void step(std::span<const double> offsets) {
    for (double d : offsets) weigh(w_, quiet_, d);
    double total = quiet_ * quiet_decay_;
    quiet_ *= quiet_decay_;
    for (std::size_t j = 0; j < n_; ++j) {
      double& w = w_[idx(j)];
      w *= decay_[j];
      total += w;
    }
    const double born = reset_p_ * total * newborn_decay_;
    const double keep = 1.0 - reset_p_;
    quiet_ *= keep;
    for (double& w : w_) w *= keep;
    const std::size_t last = idx(n_ - 1);
    quiet_ += w_[last];
    head_ = last;  // the freed slot becomes the youngest state
    w_[head_] = born;
    renormalise();
    ++k_;
    t_ = start_ + static_cast<double>(k_) * du_;
  }

  // Steps through all lattice steps ending at or before t_end.
  void advance(double t_end, std::span<const double> events, bool weigh_events = true) {
    auto it = std::lower_bound(events.begin(), events.end(), t_);
    std::vector<double> off;
    while (start_ + static_cast<double>(k_ + 1) * du_ <= t_end) {
      const double next = start_ + static_cast<double>(k_ + 1) * du_;
      off.clear();
      for (; it != events.end() && *it < next; ++it)
        if (weigh_events) off.push_back(*it - t_);
      step(off);
    }
  }

  // Posterior mean rate at t_ + delta (0 <= delta < du) after weighing the
  // events at `offsets` (all <= delta).
  double mean_at(double delta, std::span<const double> offsets = {}) const {
    std::vector<double> w = w_;
    double quiet = quiet_;
    for (double d : offsets) weigh(w, quiet, d);
    if (delta == 0.0) {
      double num = quiet * p_.lambda_base, den = quiet;
      for (std::size_t j = 0; j < n_; ++j) {
        num += w[idx(j)] * lam_[j];
        den += w[idx(j)];
      }
      return num / den;
    }
    const double qd = std::exp(-p_.lambda_base * delta);
    double num = quiet * qd * p_.lambda_base, den = quiet * qd;
    for (std::size_t j = 0; j < n_; ++j) {
      const double u = age(j);
      const double v = w[idx(j)] * std::exp(-exact(u, u + delta));
      num += v * gaussian_target_rate(p_, u + delta);
      den += v;
    }
    const double pr = -std::expm1(-p_.lambda_y * delta);
    const double born = pr * den * std::exp(-exact(0.0, 0.5 * delta));
    num = num * (1 - pr) + born * gaussian_target_rate(p_, 0.5 * delta);
    den = den * (1 - pr) + born;
    return num / den;
  }

 private:
  double age(std::size_t j) const { return (static_cast<double>(j) + 0.5) * du_; }
  double exact(double u1, double u2) const {
    double v = p_.lambda_base * (u2 - u1);
    const double hi = std::min(u2, p_.t_cut);
    const double lo = std::max(0.0, u1);
    if (hi > lo) v += gaussian_excess_integral(p_, lo, hi);
    return v;
  }
  std::size_t idx(std::size_t j) const { return (head_ + j) % n_; }

  void weigh(std::vector<double>& w, double& quiet, double delta) const {
    quiet *= p_.lambda_base;
    for (std::size_t j = 0; j < n_; ++j) w[idx(j)] *= gaussian_target_rate(p_, age(j) + delta);
  }

  void renormalise() {
    double s = quiet_;
    for (double w : w_) s += w;
    if (!(s > 0) || !std::isfinite(s))
      throw Error(ErrorKind::kDomain, "filter posterior mass vanished");
    log_z_ += std::log(s);
    const double inv = 1.0 / s;
    quiet_ *= inv;
    for (double& w : w_) w *= inv;
  }

  GaussianModelParams p_;
  double du_;
  double t_;
  double start_;
  long long k_ = 0;
  std::size_t n_ = 0;
  std::size_t head_ = 0;
  std::vector<double> w_;
  std::vector<double> lam_, decay_;
  double quiet_ = 1.0;  // initial condition: no source spike in the past
  double quiet_decay_ = 1.0, reset_p_ = 0.0, newborn_decay_ = 1.0;
  double log_z_ = 0.0;
};

namespace detail {

// Runs `f` from its current time to t and returns the rate at t.
inline double filter_rate_at(GaussianFilter& f, std::span<const double> events, double t) {
  f.advance(t, events, true);
  const double d = std::max(0.0, t - f.time());
  std::vector<double> off;
  for (auto it = std::lower_bound(events.begin(), events.end(), f.time());
       it != events.end() && *it < t; ++it)
    off.push_back(*it - f.time());
  return f.mean_at(d, off);
}

}  // namespace detail

// Filter estimate of the coarse rate at t. By default it conditions on the
// whole target train since `record_start`, with no source spikes before it.
// A finite `depth` conditions only on target events in [t - depth, t) and
// starts the source at t - depth - t_cut, which matches the Monte Carlo
// scheme for depth = t_cut.
inline double filter_oracle_rate(const GaussianModelParams& p,
                                 std::span<const double> target_events, double record_start,
                                 double t, double grid_du, double depth = kUnbounded) {
  require(t >= record_start, "t", "must be >= record start");
  require(std::is_sorted(target_events.begin(), target_events.end()), "target_history",
          "must be sorted");
  require(depth > 0, "depth", "must be > 0");
  if (!std::isfinite(depth)) {
    GaussianFilter f(p, grid_du, record_start);
    return detail::filter_rate_at(f, target_events, t);
  }
  const double cond = std::max(record_start, t - depth);
  // Lattice aligned so that `cond` is a lattice time.
  const double start = std::max(record_start, cond - p.t_cut);
  const auto pre_steps = static_cast<long long>(std::floor((cond - start) / grid_du));
  GaussianFilter f(p, grid_du, cond - static_cast<double>(pre_steps) * grid_du);
  f.advance(cond, {}, false);
  const auto first = std::lower_bound(target_events.begin(), target_events.end(), cond);
  return detail::filter_rate_at(f, std::span<const double>(first, target_events.end()), t);
}

// Filter coarse rate along a whole train (unbounded target history, quiet
// source before the start) as a left-continuous interpolant with knots every
// `knot_step` (rounded to a multiple of grid_du) and at every target event.
inline TabulatedRate filter_coarse_rate_along_train(const GaussianModelParams& p,
                                                    const SpikeTrain& train, double grid_du,
                                                    double knot_step = 0.0) {
  if (!(knot_step > 0)) knot_step = grid_du;
  const auto n_per = std::max<long long>(1, std::llround(knot_step / grid_du));
  const double t0 = train.start_time(), t1 = train.end_time();
  const auto ev = train.events();
  GaussianFilter f(p, grid_du, t0);
  std::vector<TabulatedRate::Knot> knots;
  knots.reserve(static_cast<std::size_t>((t1 - t0) / (grid_du * n_per)) + 2 * ev.size() + 4);
  auto add = [&](double t, double left, double right) {
    if (!knots.empty() && knots.back().t >= t) {
      knots.back().right = right;
      return;
    }
    knots.push_back({t, left, right});
  };
  const double r0 = f.mean_at(0.0);
  add(t0, r0, r0);
  std::size_t e = 0;
  std::vector<double> off;
  long long k = 0;
  for (;;) {
    const double a = f.time();
    const double b = t0 + static_cast<double>(k + 1) * grid_du;
    off.clear();
    for (; e < ev.size() && ev[e] < b; ++e) {
      const double d = ev[e] - a;
      const double left = f.mean_at(d, off);
      off.push_back(d);
      add(ev[e], left, f.mean_at(d, off));
    }
    if (b >= t1) {
      const double left = f.mean_at(t1 - a, off);
      add(t1, left, left);
      break;
    }
    f.step(off);
    ++k;
    if (k % n_per == 0) {
      const double r = f.mean_at(0.0);
      add(b, r, r);
    }
  }
  return TabulatedRate(std::move(knots));
}

}  // namespace cte
