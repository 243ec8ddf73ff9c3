#pragma once

// Path log-densities and the pathwise transfer entropy of point and jump
// processes, decomposed into jump contributions at target events and the
// non-spiking integral of (coarse rate - joint rate) between them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "cte/core.hpp"
#include "cte/intensity.hpp"
#include "cte/parallel.hpp"
#include "cte/quadrature.hpp"

namespace cte {

// How rates see time before the record start.
enum class PriorMode {
  kEmptyHistory,    // nothing happened before the record start
  kRequireHistory,  // windows must fit inside the record; otherwise an error
};

struct TimeInterval {
  double t0;
  double t1;
};

struct PathOptions {
  PriorMode prior = PriorMode::kEmptyHistory;
  double tol = 1e-9;        // absolute quadrature error per unit time
  double grid_step = 0.0;   // >0: sample the non-spiking rate on this grid
};

struct JumpContribution {
  double t;
  double delta;  // nats
};

struct RateSample {
  double t;
  double value;
};

struct PathwiseTEResult {
  double t0 = 0.0;
  double t1 = 0.0;
  double total = 0.0;
  std::vector<JumpContribution> jump_contributions;
  double nonspiking_integral = 0.0;
  std::vector<RateSample> nonspiking_samples;
  HistoryWindows windows;
  // Cumulative non-spiking integral at segment boundaries and grid points.
  std::vector<RateSample> integral_knots;
  double quadrature_error = 0.0;

  double jump_sum() const {
    std::vector<double> d;
    d.reserve(jump_contributions.size());
    for (const auto& j : jump_contributions) d.push_back(j.delta);
    return pairwise_sum(d);
  }
};

inline double jump_contribution(double lambda_joint, double lambda_coarse) {
  if (!(lambda_joint > 0) || !(lambda_coarse > 0))
    throw Error(ErrorKind::kSingularRatio, "jump contribution needs both rates > 0");
  return std::log(lambda_joint / lambda_coarse);
}

inline double nonspiking_rate(double lambda_coarse, double lambda_joint) {
  return lambda_coarse - lambda_joint;
}

struct StateRate {
  StateLabel state;
  double rate;
};

// Total rate of leaving `current`; any self-rate is excluded.
inline double escape_rate(std::span<const StateRate> rates, StateLabel current) {
  double s = 0.0;
  for (const auto& r : rates)
    if (r.state != current) s += r.rate;
  return s;
}

namespace detail {

inline void check_interval(const TimeInterval& iv, double rec_start, double rec_end) {
  if (!(iv.t1 >= iv.t0))
    throw Error(ErrorKind::kDomain, "interval end precedes its start");
  if (iv.t0 < rec_start || iv.t1 > rec_end)
    throw Error(ErrorKind::kDomain, "interval outside the record");
}

inline void check_prior(const TimeInterval& iv, double rec_start, const HistoryWindows& w,
                        PriorMode prior) {
  if (prior == PriorMode::kRequireHistory && iv.t0 - std::max(w.s, w.r) < rec_start) {
    std::ostringstream os;
    os << "windows reach before the record start at t0=" << iv.t0
       << "; declare an empty-history prior or shorten the windows";
    throw Error(ErrorKind::kMissingHistory, os.str());
  }
}

// Points in (t0, t1) where a window content changes: event entries and,
// for finite depths, exits at event + depth.
inline void add_structural_points(std::span<const double> events, double depth, double t0,
                                  double t1, std::vector<double>& out) {
  for (double e : events) {
    if (e > t0 && e < t1) out.push_back(e);
    if (std::isfinite(depth)) {
      const double x = e + depth;
      if (x > t0 && x < t1) out.push_back(x);
    }
  }
}

inline std::vector<double> finish_points(std::vector<double> pts, double t0, double t1) {
  pts.push_back(t0);
  pts.push_back(t1);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

inline std::vector<double> grid_points(double t0, double t1, double step) {
  std::vector<double> g;
  if (step > 0) {
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / step));
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = t0 + static_cast<double>(k) * step;
      if (t < t1) g.push_back(t);
    }
  }
  return g;
}

// Integral of one model over (a, b] with histories frozen.
template <class M>
QuadratureResult segment_integral(const M& model, double a, double b, const History& own,
                                  const History& other, double tol) {
  if constexpr (ExactlyIntegrable<M>) {
    QuadratureResult r;
    r.value = model.integral(a, b, own, other);
    return r;
  } else {
    if constexpr (std::same_as<M, AnyRate>) {
      if (auto v = model.try_integral(a, b, own, other)) {
        QuadratureResult r;
        r.value = *v;
        return r;
      }
    }
    std::vector<double> cuts;
    model.breakpoints(a, own, other, b, cuts);
    return integrate_piecewise([&](double t) { return model.rate(t, own, other); }, a, b,
                               std::move(cuts), tol);
  }
}

inline void note_quadrature(const QuadratureResult& q, double& err_sum) {
  err_sum += q.error;
  if (!q.converged) {
    std::ostringstream os;
    os.precision(12);
    os << "quadrature did not converge on [" << q.worst_a << ", " << q.worst_b
       << "], error estimate " << q.worst_error;
    throw Error(ErrorKind::kTolerance, os.str());
  }
}

}  // namespace detail

// Integral of coarse(t) - joint(t) between a and b. `breakpoints` are the
// kinks of either integrand; the difference is integrated per smooth piece.
template <class FC, class FJ>
QuadratureResult integrate_rate_difference(FC&& coarse, FJ&& joint, double a, double b,
                                           std::vector<double> breakpoints, double tol = 1e-9) {
  if (!(b > a)) return {};
  auto q = integrate_piecewise([&](double t) { return coarse(t) - joint(t); }, a, b,
                               std::move(breakpoints), tol);
  double err = 0.0;
  detail::note_quadrature(q, err);
  return q;
}

struct LogDensity {
  double value = 0.0;  // -inf when impossible
  bool impossible = false;
  double impossible_at = 0.0;
  std::size_t n_events = 0;
};

// Janossy log-density of one channel's events on [t0, t1): sum of log rates
// at the events minus the integrated rate. The model sees (own, other)
// histories; depth s applies to x events and r to y events.
template <RateModel M>
LogDensity log_path_density(const M& model, const JointSpikeRecord& rec, Channel channel,
                            TimeInterval iv, const HistoryWindows& windows,
                            const PathOptions& opt = {}) {
  detail::check_interval(iv, rec.start_time(), rec.end_time());
  detail::check_prior(iv, rec.start_time(), windows, opt.prior);
  const auto own_ev = rec.channel(channel).events();
  const auto oth_ev = rec.channel(channel == Channel::kX ? Channel::kY : Channel::kX).events();
  const double own_depth = channel == Channel::kX ? windows.s : windows.r;
  const double oth_depth = channel == Channel::kX ? windows.r : windows.s;
  const double rs = rec.start_time();

  LogDensity out;
  std::vector<double> logs;
  for (std::size_t i = rec.channel(channel).lower_index(iv.t0); i < own_ev.size(); ++i) {
    const double t = own_ev[i];
    if (!(t < iv.t1)) break;
    const double v = model.rate(t, make_history(own_ev, rs, t, own_depth),
                                make_history(oth_ev, rs, t, oth_depth));
    ++out.n_events;
    if (!(v > 0)) {
      out.impossible = true;
      out.impossible_at = t;
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
    logs.push_back(std::log(v));
  }
  std::vector<double> pts;
  detail::add_structural_points(own_ev, own_depth, iv.t0, iv.t1, pts);
  detail::add_structural_points(oth_ev, oth_depth, iv.t0, iv.t1, pts);
  pts = detail::finish_points(std::move(pts), iv.t0, iv.t1);
  std::vector<double> parts;
  parts.reserve(pts.size());
  double err = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    const double m = 0.5 * (a + b);
    const auto q = detail::segment_integral(model, a, b, make_history(own_ev, rs, m, own_depth),
                                            make_history(oth_ev, rs, m, oth_depth), opt.tol);
    detail::note_quadrature(q, err);
    parts.push_back(q.value);
  }
  out.value = pairwise_sum(logs) - pairwise_sum(parts);
  return out;
}

// Pathwise transfer entropy y -> x on [t0, t1). `joint` is the target rate
// given both histories, `coarse` the target rate given the target history
// alone (it is shown an empty source history).
template <RateModel MJ, RateModel MC>
PathwiseTEResult pathwise_te(const MJ& joint, const MC& coarse, const JointSpikeRecord& rec,
                             TimeInterval iv, const HistoryWindows& windows,
                             const PathOptions& opt = {}) {
  validate_joint_record(rec);
  detail::check_interval(iv, rec.start_time(), rec.end_time());
  detail::check_prior(iv, rec.start_time(), windows, opt.prior);
  const auto xe = rec.x().events();
  const auto ye = rec.y().events();
  const double rs = rec.start_time();
  const History none{};

  PathwiseTEResult res;
  res.t0 = iv.t0;
  res.t1 = iv.t1;
  res.windows = windows;

  for (std::size_t i = rec.x().lower_index(iv.t0); i < xe.size() && xe[i] < iv.t1; ++i) {
    const double t = xe[i];
    const History hx = make_history(xe, rs, t, windows.s);
    const History hy = make_history(ye, rs, t, windows.r);
    const double lj = joint.rate(t, hx, hy);
    const double lc = coarse.rate(t, hx, none);
    if (!(lj > 0) || !(lc > 0)) {
      std::ostringstream os;
      os.precision(12);
      os << "zero rate at target event t_i=" << t << " (joint " << lj << ", coarse " << lc
         << ")";
      throw Error(ErrorKind::kSingularRatio, os.str());
    }
    res.jump_contributions.push_back({t, std::log(lj / lc)});
  }

  const auto grid = detail::grid_points(iv.t0, iv.t1, opt.grid_step);
  for (double t : grid) {
    const History hx = make_history(xe, rs, t, windows.s);
    const History hy = make_history(ye, rs, t, windows.r);
    res.nonspiking_samples.push_back({t, coarse.rate(t, hx, none) - joint.rate(t, hx, hy)});
  }

  std::vector<double> pts(grid.begin(), grid.end());
  detail::add_structural_points(xe, windows.s, iv.t0, iv.t1, pts);
  detail::add_structural_points(ye, windows.r, iv.t0, iv.t1, pts);
  pts = detail::finish_points(std::move(pts), iv.t0, iv.t1);

  std::vector<double> parts;
  parts.reserve(pts.size());
  res.integral_knots.reserve(pts.size());
  res.integral_knots.push_back({iv.t0, 0.0});
  double running = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    const double m = 0.5 * (a + b);
    const History hx = make_history(xe, rs, m, windows.s);
    const History hy = make_history(ye, rs, m, windows.r);
    const auto qc = detail::segment_integral(coarse, a, b, hx, none, opt.tol);
    const auto qj = detail::segment_integral(joint, a, b, hx, hy, opt.tol);
    detail::note_quadrature(qc, res.quadrature_error);
    detail::note_quadrature(qj, res.quadrature_error);
    const double piece = qc.value - qj.value;
    parts.push_back(piece);
    running += piece;
    res.integral_knots.push_back({b, running});
  }
  res.nonspiking_integral = pairwise_sum(parts);
  res.integral_knots.back().value = res.nonspiking_integral;
  res.total = res.jump_sum() + res.nonspiking_integral;
  return res;
}

// Cumulative pathwise TE at each grid time: jumps at events strictly before
// t plus the non-spiking integral up to t, so the curve is left-continuous.
inline std::vector<RateSample> cumulative_te_curve(const PathwiseTEResult& res,
                                                   std::span<const double> grid) {
  std::vector<RateSample> out;
  out.reserve(grid.size());
  const auto& kn = res.integral_knots;
  std::vector<double> cum_jump;
  cum_jump.reserve(res.jump_contributions.size() + 1);
  cum_jump.push_back(0.0);
  for (const auto& j : res.jump_contributions) cum_jump.push_back(cum_jump.back() + j.delta);
  for (double t : grid) {
    if (t < res.t0 || t > res.t1)
      throw Error(ErrorKind::kDomain, "grid point outside the analysed interval");
    const auto nj = static_cast<std::size_t>(
        std::lower_bound(res.jump_contributions.begin(), res.jump_contributions.end(), t,
                         [](const JumpContribution& j, double v) { return j.t < v; }) -
        res.jump_contributions.begin());
    double ns = 0.0;
    if (!kn.empty()) {
      const auto it = std::lower_bound(kn.begin(), kn.end(), t,
                                       [](const RateSample& s, double v) { return s.t < v; });
      if (it == kn.end()) {
        ns = kn.back().value;
      } else if (it->t == t || it == kn.begin()) {
        ns = it->value;
      } else {
        const auto lo = it - 1;
        const double w = (t - lo->t) / (it->t - lo->t);
        ns = lo->value + w * (it->value - lo->value);
      }
    }
    // At t1 every event in [t0, t1) has been counted.
    const double jumps = (t == res.t1) ? cum_jump.back() : cum_jump[nj];
    out.push_back({t, jumps + ns});
  }
  return out;
}

// ---------------------------------------------------------------- jump processes

struct JumpHistory {
  StateLabel current;                     // state just before t
  std::span<const Transition> transitions;  // transitions in [t - depth, t)
  double window_start = -kUnbounded;
  bool clipped = false;
};

// Per-destination transition rates W(x' | histories). Rates to the current
// state, if reported, are ignored by escape_rate.
template <class M>
concept JumpRateModel = requires(const M& m, double t, const JumpHistory& own,
                                 const History& src, std::vector<StateRate>& rates,
                                 std::vector<double>& bps) {
  m.transition_rates(t, own, src, rates);
  m.breakpoints(t, own, src, t, bps);
};

inline JumpHistory make_jump_history(const JumpTrajectory& traj, double t, double depth) {
  const auto times = traj.times();
  const WindowResult w = window_indices(times, traj.start_time(), t, depth);
  JumpHistory h;
  h.current = traj.state_before(t);
  h.transitions = traj.transitions().subspan(w.begin, w.end - w.begin);
  h.window_start = w.clipped ? traj.start_time() : t - depth;
  h.clipped = w.clipped;
  return h;
}

// Pathwise TE for a discrete-state target trajectory driven by a spike-train
// source: log-ratios of transition rates into each entered state plus the
// integral of the escape-rate difference.
template <JumpRateModel WJ, JumpRateModel WC>
PathwiseTEResult pathwise_te_jump(const WJ& w_joint, const WC& w_coarse,
                                  const JumpTrajectory& traj, const SpikeTrain& source,
                                  TimeInterval iv, const HistoryWindows& windows,
                                  const PathOptions& opt = {}) {
  if (source.start_time() != traj.start_time() || source.end_time() != traj.end_time())
    throw Error(ErrorKind::kValidation, "source and trajectory cover different intervals");
  detail::check_interval(iv, traj.start_time(), traj.end_time());
  detail::check_prior(iv, traj.start_time(), windows, opt.prior);
  const auto ye = source.events();
  const auto xt = traj.times();
  const double rs = traj.start_time();
  const History none{};

  PathwiseTEResult res;
  res.t0 = iv.t0;
  res.t1 = iv.t1;
  res.windows = windows;
  std::vector<StateRate> buf;

  auto rate_into = [&](std::span<const StateRate> rates, StateLabel s) {
    double v = 0.0;
    for (const auto& r : rates)
      if (r.state == s) v += r.rate;
    return v;
  };

  for (const auto& tr : traj.transitions()) {
    if (tr.time < iv.t0) continue;
    if (!(tr.time < iv.t1)) break;
    const JumpHistory hx = make_jump_history(traj, tr.time, windows.s);
    const History hy = make_history(ye, rs, tr.time, windows.r);
    buf.clear();
    w_joint.transition_rates(tr.time, hx, hy, buf);
    const double wj = rate_into(buf, tr.state);
    buf.clear();
    w_coarse.transition_rates(tr.time, hx, none, buf);
    const double wc = rate_into(buf, tr.state);
    if (!(wj > 0) || !(wc > 0)) {
      std::ostringstream os;
      os.precision(12);
      os << "zero transition rate into state " << tr.state << " at t_i=" << tr.time;
      throw Error(ErrorKind::kSingularRatio, os.str());
    }
    res.jump_contributions.push_back({tr.time, std::log(wj / wc)});
  }

  auto escape = [&](const auto& model, double t, const JumpHistory& hx, const History& hy) {
    std::vector<StateRate> r;
    model.transition_rates(t, hx, hy, r);
    return escape_rate(r, hx.current);
  };

  const auto grid = detail::grid_points(iv.t0, iv.t1, opt.grid_step);
  for (double t : grid) {
    const JumpHistory hx = make_jump_history(traj, t, windows.s);
    const History hy = make_history(ye, rs, t, windows.r);
    res.nonspiking_samples.push_back({t, escape(w_coarse, t, hx, none) - escape(w_joint, t, hx, hy)});
  }

  std::vector<double> pts(grid.begin(), grid.end());
  detail::add_structural_points(xt, windows.s, iv.t0, iv.t1, pts);
  detail::add_structural_points(ye, windows.r, iv.t0, iv.t1, pts);
  pts = detail::finish_points(std::move(pts), iv.t0, iv.t1);
  std::vector<double> parts;
  res.integral_knots.push_back({iv.t0, 0.0});
  double running = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    const double m = 0.5 * (a + b);
    const JumpHistory hx = make_jump_history(traj, m, windows.s);
    const History hy = make_history(ye, rs, m, windows.r);
    std::vector<double> cuts;
    w_joint.breakpoints(a, hx, hy, b, cuts);
    w_coarse.breakpoints(a, hx, none, b, cuts);
    const auto q = integrate_piecewise(
        [&](double t) { return escape(w_coarse, t, hx, none) - escape(w_joint, t, hx, hy); }, a,
        b, std::move(cuts), opt.tol);
    detail::note_quadrature(q, res.quadrature_error);
    parts.push_back(q.value);
    running += q.value;
    res.integral_knots.push_back({b, running});
  }
  res.nonspiking_integral = pairwise_sum(parts);
  res.integral_knots.back().value = res.nonspiking_integral;
  res.total = res.jump_sum() + res.nonspiking_integral;
  return res;
}

// Wraps a point-process rate model as a counting process: from count n the
// only destination is n + 1, with the point-process rate.
template <RateModel M>
struct CountingProcessModel {
  M model;

  explicit CountingProcessModel(M m) : model(std::move(m)) {}

  // Transition times of the counting trajectory are the spike times.
  void transition_rates(double t, const JumpHistory& own, const History& src,
                        std::vector<StateRate>& out) const {
    scratch_.clear();
    for (const auto& tr : own.transitions) scratch_.push_back(tr.time);
    History hx{scratch_, own.window_start, own.clipped};
    out.push_back({own.current + 1, model.rate(t, hx, src)});
  }
  void breakpoints(double t, const JumpHistory& own, const History& src, double horizon,
                   std::vector<double>& out) const {
    scratch_.clear();
    for (const auto& tr : own.transitions) scratch_.push_back(tr.time);
    History hx{scratch_, own.window_start, own.clipped};
    model.breakpoints(t, hx, src, horizon, out);
  }

 private:
  mutable std::vector<double> scratch_;
};

// Spike train as a counting-process trajectory 0 -> 1 -> 2 -> ...
inline JumpTrajectory counting_trajectory(const SpikeTrain& train) {
  std::vector<Transition> tr;
  tr.reserve(train.size());
  StateLabel n = 0;
  for (double t : train.events()) tr.push_back({t, ++n});
  return JumpTrajectory(train.start_time(), train.end_time(), 0, std::move(tr));
}

}  // namespace cte
