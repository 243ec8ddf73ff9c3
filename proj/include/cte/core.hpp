#pragma once

// Domain types shared by every module: spike trains, jump trajectories,
// joint records, history windows and the right-open windowing convention.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cte {

enum class ErrorKind {
  kValidation,        // bad user input or violated type invariant
  kDomain,            // argument outside the operation's domain
  kBipartite,         // same event time in both channels
  kOrdering,          // non-monotone event sequence
  kSingularRatio,     // zero rate at an observed target event
  kImpossiblePath,    // zero rate at an observed event in a density
  kMissingHistory,    // window reaches before the record and no prior declared
  kMissingBound,      // thinning requested for a model without a rate bound
  kStepTooCoarse,     // fixed-step dt * bound >= 1
  kInsufficientSamples,
  kUndersampled,
  kTolerance,
  kIo,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kBipartite: return "bipartite violation";
    case ErrorKind::kOrdering: return "ordering violation";
    case ErrorKind::kSingularRatio: return "singular ratio";
    case ErrorKind::kImpossiblePath: return "impossible path";
    case ErrorKind::kMissingHistory: return "missing history";
    case ErrorKind::kMissingBound: return "missing rate bound";
    case ErrorKind::kStepTooCoarse: return "step too coarse";
    case ErrorKind::kInsufficientSamples: return "insufficient samples";
    case ErrorKind::kUndersampled: return "undersampled table";
    case ErrorKind::kTolerance: return "tolerance not met";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string field = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Name of the offending configuration field, when there is one.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

inline void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kValidation, field + ": " + msg, field);
}

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// History depths s (target) and r (source). Infinity means unbounded.
struct HistoryWindows {
  double s = kUnbounded;
  double r = kUnbounded;

  HistoryWindows() = default;
  HistoryWindows(double target_depth, double source_depth) : s(target_depth), r(source_depth) {
    require(s > 0 && !std::isnan(s), "s", "history depth must be > 0");
    require(r > 0 && !std::isnan(r), "r", "history depth must be > 0");
  }
  static HistoryWindows unbounded() { return {}; }
};

class SpikeTrain {
 public:
  SpikeTrain() = default;
  SpikeTrain(double start, double end, std::vector<double> events)
      : start_(start), end_(end), events_(std::move(events)) {
    if (!(end_ > start_))
      throw Error(ErrorKind::kValidation, "end_time must exceed start_time", "end_time");
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const double e = events_[i];
      if (!(e >= start_ && e < end_)) {
        std::ostringstream os;
        os << "event " << e << " outside [" << start_ << ", " << end_ << ")";
        throw Error(ErrorKind::kOrdering, os.str());
      }
      if (i > 0 && !(events_[i - 1] < e)) {
        std::ostringstream os;
        os << "events not strictly increasing at index " << i << " (" << events_[i - 1]
           << " then " << e << ")";
        throw Error(ErrorKind::kOrdering, os.str());
      }
    }
  }

  double start_time() const noexcept { return start_; }
  double end_time() const noexcept { return end_; }
  double duration() const noexcept { return end_ - start_; }
  std::span<const double> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  // Index of the first event >= t.
  std::size_t lower_index(double t) const {
    return static_cast<std::size_t>(std::lower_bound(events_.begin(), events_.end(), t) -
                                    events_.begin());
  }

  SpikeTrain shifted(double dt) const {
    std::vector<double> ev(events_);
    for (double& e : ev) e += dt;
    return SpikeTrain(start_ + dt, end_ + dt, std::move(ev));
  }

 private:
  double start_ = 0.0;
  double end_ = 1.0;
  std::vector<double> events_;
};

// Events of one channel strictly before t and inside the lookback window.
// `clipped` is set when the window was cut at the record start; models treat
// the cut part as empty (the "prior absence of events" convention).
struct History {
  std::span<const double> events;
  double window_start = -kUnbounded;
  bool clipped = false;

  bool empty() const noexcept { return events.empty(); }
  std::optional<double> last() const {
    if (events.empty()) return std::nullopt;
    return events.back();
  }
  std::optional<double> second_last() const {
    if (events.size() < 2) return std::nullopt;
    return events[events.size() - 2];
  }
};

struct WindowResult {
  std::size_t begin = 0;  // index into train events
  std::size_t end = 0;
  bool clipped = false;
};

// Indices of events in [t - depth, t). Unbounded depths clip at start_time.
inline WindowResult window_indices(std::span<const double> events, double record_start,
                                   double t, double depth) {
  WindowResult w;
  double lo = t - depth;
  if (!(lo >= record_start)) {
    lo = record_start;
    w.clipped = true;
  }
  w.begin = static_cast<std::size_t>(std::lower_bound(events.begin(), events.end(), lo) -
                                     events.begin());
  w.end = static_cast<std::size_t>(std::lower_bound(events.begin(), events.end(), t) -
                                   events.begin());
  if (w.end < w.begin) w.end = w.begin;
  return w;
}

inline History make_history(std::span<const double> events, double record_start, double t,
                            double depth) {
  const WindowResult w = window_indices(events, record_start, t, depth);
  History h;
  h.events = events.subspan(w.begin, w.end - w.begin);
  h.window_start = w.clipped ? record_start : t - depth;
  h.clipped = w.clipped;
  return h;
}

struct WindowedEvents {
  std::vector<double> events;
  bool clipped = false;
};

// Events of `train` in the right-open window [t - depth, t).
inline WindowedEvents history_window(const SpikeTrain& train, double t, double depth) {
  if (!(t >= train.start_time() && t <= train.end_time())) {
    std::ostringstream os;
    os << "t=" << t << " outside [" << train.start_time() << ", " << train.end_time() << "]";
    throw Error(ErrorKind::kDomain, os.str());
  }
  if (!(depth > 0)) throw Error(ErrorKind::kDomain, "window depth must be > 0");
  const History h = make_history(train.events(), train.start_time(), t, depth);
  return {std::vector<double>(h.events.begin(), h.events.end()), h.clipped};
}

enum class Channel : std::uint8_t { kX = 0, kY = 1 };

inline char channel_char(Channel c) { return c == Channel::kX ? 'x' : 'y'; }

class JointSpikeRecord {
 public:
  JointSpikeRecord() = default;
  JointSpikeRecord(SpikeTrain x, SpikeTrain y) : x_(std::move(x)), y_(std::move(y)) {}

  const SpikeTrain& x() const noexcept { return x_; }
  const SpikeTrain& y() const noexcept { return y_; }
  const SpikeTrain& channel(Channel c) const noexcept { return c == Channel::kX ? x_ : y_; }
  double start_time() const noexcept { return x_.start_time(); }
  double end_time() const noexcept { return x_.end_time(); }
  double duration() const noexcept { return x_.duration(); }

 private:
  SpikeTrain x_;
  SpikeTrain y_;
};

// Checks interval agreement and the bipartite property. Train ordering is
// enforced at SpikeTrain construction.
inline const JointSpikeRecord& validate_joint_record(const JointSpikeRecord& rec) {
  if (rec.x().start_time() != rec.y().start_time() || rec.x().end_time() != rec.y().end_time())
    throw Error(ErrorKind::kValidation, "x and y cover different intervals");
  const auto xs = rec.x().events();
  const auto ys = rec.y().events();
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    if (xs[i] == ys[j]) {
      std::ostringstream os;
      os.precision(17);
      os << "event at t=" << xs[i] << " appears in both channels";
      throw Error(ErrorKind::kBipartite, os.str());
    }
    if (xs[i] < ys[j]) ++i; else ++j;
  }
  return rec;
}

// Builds and validates a record from raw per-channel event lists; ordering
// problems surface as kOrdering, shared times as kBipartite.
inline JointSpikeRecord make_joint_record(double start, double end, std::vector<double> x,
                                          std::vector<double> y) {
  JointSpikeRecord rec(SpikeTrain(start, end, std::move(x)), SpikeTrain(start, end, std::move(y)));
  validate_joint_record(rec);
  return rec;
}

struct TaggedEvent {
  double time;
  Channel channel;
  bool operator==(const TaggedEvent&) const = default;
};

inline std::vector<TaggedEvent> merge_event_streams(const JointSpikeRecord& rec) {
  const auto xs = rec.x().events();
  const auto ys = rec.y().events();
  std::vector<TaggedEvent> out;
  out.reserve(xs.size() + ys.size());
  std::size_t i = 0, j = 0;
  while (i < xs.size() || j < ys.size()) {
    if (j == ys.size() || (i < xs.size() && xs[i] < ys[j]))
      out.push_back({xs[i++], Channel::kX});
    else
      out.push_back({ys[j++], Channel::kY});
  }
  return out;
}

// Discrete-state jump trajectory. States are opaque integers.
using StateLabel = std::int64_t;

struct Transition {
  double time;
  StateLabel state;  // state entered at `time`
};

class JumpTrajectory {
 public:
  JumpTrajectory() = default;
  JumpTrajectory(double start, double end, StateLabel initial, std::vector<Transition> transitions)
      : start_(start), end_(end), initial_(initial), transitions_(std::move(transitions)) {
    if (!(end_ > start_))
      throw Error(ErrorKind::kValidation, "end_time must exceed start_time", "end_time");
    StateLabel prev = initial_;
    for (std::size_t i = 0; i < transitions_.size(); ++i) {
      const auto& tr = transitions_[i];
      if (!(tr.time >= start_ && tr.time < end_))
        throw Error(ErrorKind::kOrdering, "transition time outside [start, end)");
      if (i > 0 && !(transitions_[i - 1].time < tr.time))
        throw Error(ErrorKind::kOrdering, "transition times not strictly increasing");
      if (tr.state == prev)
        throw Error(ErrorKind::kValidation, "transition does not change state");
      prev = tr.state;
    }
    times_.reserve(transitions_.size());
    for (const auto& tr : transitions_) times_.push_back(tr.time);
  }

  double start_time() const noexcept { return start_; }
  double end_time() const noexcept { return end_; }
  StateLabel initial_state() const noexcept { return initial_; }
  std::span<const Transition> transitions() const noexcept { return transitions_; }
  std::span<const double> times() const noexcept { return times_; }

  // State x_t^- (left limit): the state before any transition at t.
  StateLabel state_before(double t) const {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
    return k == 0 ? initial_ : transitions_[k - 1].state;
  }

 private:
  double start_ = 0.0;
  double end_ = 1.0;
  StateLabel initial_ = 0;
  std::vector<Transition> transitions_;
  std::vector<double> times_;
};

}  // namespace cte
