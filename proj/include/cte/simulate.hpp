#pragma once

// Simulation of coupled history-dependent point processes: exact thinning
// when both channels have a rate bound, fixed-step Bernoulli otherwise.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "cte/core.hpp"
#include "cte/intensity.hpp"
#include "cte/random.hpp"

namespace cte {

enum class Scheme { kThinning, kFixedStep };

struct SimulationConfig {
  double start_time = 0.0;
  double duration = 100.0;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::kThinning;
  double dt = 1e-3;  // fixed_step only
  // Events before start_time seen by the rates. Absent: empty history.
  std::optional<JointSpikeRecord> prior;
  HistoryWindows windows = HistoryWindows::unbounded();

  void validate() const {
    require(duration > 0 && std::isfinite(duration), "duration", "must be > 0");
    if (scheme == Scheme::kFixedStep) require(dt > 0 && std::isfinite(dt), "dt", "must be > 0");
    if (prior)
      require(prior->end_time() <= start_time, "prior", "prior segment must end by start_time");
  }
};

inline SpikeTrain simulate_homogeneous_poisson(double rate, double duration, std::uint64_t seed,
                                               double start = 0.0) {
  require(rate >= 0 && std::isfinite(rate), "rate", "must be finite and >= 0");
  require(duration > 0, "duration", "must be > 0");
  std::vector<double> ev;
  if (rate > 0) {
    CounterRng rng(seed, {0x506f6973ULL});
    const double end = start + duration;
    double t = start + rng.exponential(rate);
    while (t < end) {
      ev.push_back(t);
      t += rng.exponential(rate);
    }
  }
  return SpikeTrain(start, start + duration, std::move(ev));
}

namespace detail {

struct ChannelState {
  std::vector<double> events;  // prior events followed by simulated ones
  std::size_t n_prior = 0;
};

inline History history_at(const ChannelState& c, double clip_start, double t, double depth) {
  return make_history(c.events, clip_start, t, depth);
}

inline void check_rate(double v, Channel c, double t) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "channel " << channel_char(c) << " rate " << v << " at t=" << t
       << " is negative or not finite";
    throw Error(ErrorKind::kDomain, os.str());
  }
}

}  // namespace detail

// x_model.rate(t, x history, y history); y_model.rate(t, y history, x history).
template <RateModel MX, RateModel MY>
JointSpikeRecord simulate_coupled(const MX& x_model, const MY& y_model,
                                  const SimulationConfig& cfg) {
  cfg.validate();
  const double start = cfg.start_time;
  const double end = start + cfg.duration;
  detail::ChannelState xs, ys;
  double clip = start;
  if (cfg.prior) {
    clip = cfg.prior->start_time();
    const auto px = cfg.prior->x().events();
    const auto py = cfg.prior->y().events();
    xs.events.assign(px.begin(), px.end());
    ys.events.assign(py.begin(), py.end());
    xs.n_prior = px.size();
    ys.n_prior = py.size();
  }
  const double s = cfg.windows.s;
  const double r = cfg.windows.r;

  auto rate_x = [&](double t) {
    const double v = x_model.rate(t, detail::history_at(xs, clip, t, s),
                                  detail::history_at(ys, clip, t, r));
    detail::check_rate(v, Channel::kX, t);
    return v;
  };
  auto rate_y = [&](double t) {
    const double v = y_model.rate(t, detail::history_at(ys, clip, t, r),
                                  detail::history_at(xs, clip, t, s));
    detail::check_rate(v, Channel::kY, t);
    return v;
  };

  if (cfg.scheme == Scheme::kThinning) {
    const auto bx = x_model.upper_bound();
    const auto by = y_model.upper_bound();
    if (!bx || !by)
      throw Error(ErrorKind::kMissingBound,
                  std::string("thinning needs a rate bound for channel ") + (!bx ? "x" : "y"));
    // Independent proposal streams per channel; merged in time order they
    // form the combined-bound proposal process.
    CounterRng rx(cfg.seed, {0x78ULL});
    CounterRng ry(cfg.seed, {0x79ULL});
    const double inf = std::numeric_limits<double>::infinity();
    double px = *bx > 0 ? start + rx.exponential(*bx) : inf;
    double py = *by > 0 ? start + ry.exponential(*by) : inf;
    while (px < end || py < end) {
      if (px <= py) {
        const double t = px;
        const double u = rx.uniform();
        const double v = rate_x(t);
        if (v > *bx * (1.0 + 1e-12))
          throw Error(ErrorKind::kDomain, "x rate exceeds its declared upper bound");
        if (u * *bx < v) xs.events.push_back(t);
        px = t + rx.exponential(*bx);
      } else {
        const double t = py;
        const double u = ry.uniform();
        const double v = rate_y(t);
        if (v > *by * (1.0 + 1e-12))
          throw Error(ErrorKind::kDomain, "y rate exceeds its declared upper bound");
        // A proposal tying with an accepted x event is dropped (bipartite).
        const bool tie = !xs.events.empty() && xs.events.back() == t;
        if (!tie && u * *by < v) ys.events.push_back(t);
        py = t + ry.exponential(*by);
      }
    }
  } else {
    const double dt = cfg.dt;
    if (const auto bx = x_model.upper_bound(), by = y_model.upper_bound(); bx && by) {
      if (!((*bx + *by) * dt < 1.0))
        throw Error(ErrorKind::kStepTooCoarse, "dt * (bound_x + bound_y) must be < 1", "dt");
    }
    CounterRng rx(cfg.seed, {0x78ULL, 0x66ULL});
    CounterRng ry(cfg.seed, {0x79ULL, 0x66ULL});
    const auto n_steps = static_cast<std::uint64_t>(std::ceil(cfg.duration / dt));
    for (std::uint64_t k = 0; k < n_steps; ++k) {
      const double t = start + static_cast<double>(k) * dt;
      if (!(t < end)) break;
      const double vx = rate_x(t);
      const double vy = rate_y(t);
      if (!((vx + vy) * dt < 1.0))
        throw Error(ErrorKind::kStepTooCoarse, "rate * dt reached 1", "dt");
      const double ux = rx.uniform();
      const double uy = ry.uniform();
      // At most one channel fires per step.
      if (ux < vx * dt)
        xs.events.push_back(t);
      else if (uy < vy * dt)
        ys.events.push_back(t);
    }
  }

  std::vector<double> out_x(xs.events.begin() + static_cast<std::ptrdiff_t>(xs.n_prior),
                            xs.events.end());
  std::vector<double> out_y(ys.events.begin() + static_cast<std::ptrdiff_t>(ys.n_prior),
                            ys.events.end());
  return make_joint_record(start, end, std::move(out_x), std::move(out_y));
}

}  // namespace cte
