#pragma once

// The conditional-intensity contract. A rate model for a channel maps
// (t, own history, other-channel history) to a rate >= 0. Histories hold the
// events strictly before t, so rates are left-continuous in t.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "cte/core.hpp"

namespace cte {

// breakpoints() appends the points in (t, horizon] where t -> rate(t) is not
// smooth while both histories stay frozen. Event entry/exit points of the
// windows themselves are handled by callers and need not be reported.
template <class M>
concept RateModel = requires(const M& m, double t, const History& own, const History& other,
                             std::vector<double>& out) {
  { m.rate(t, own, other) } -> std::convertible_to<double>;
  { m.upper_bound() } -> std::convertible_to<std::optional<double>>;
  m.breakpoints(t, own, other, t, out);
};

// Optional capability: exact integral of the rate over [a, b] with frozen
// histories.
template <class M>
concept ExactlyIntegrable = requires(const M& m, double a, const History& h) {
  { m.integral(a, a, h, h) } -> std::convertible_to<double>;
};

// Type-erased rate model for runtime model selection.
class AnyRate {
 public:
  AnyRate() = default;

  template <class M>
    requires(RateModel<M> && !std::same_as<std::remove_cvref_t<M>, AnyRate>)
  AnyRate(M model)  // NOLINT(google-explicit-constructor)
      : impl_(std::make_shared<Impl<M>>(std::move(model))) {}

  double rate(double t, const History& own, const History& other) const {
    return impl_->rate(t, own, other);
  }
  std::optional<double> upper_bound() const { return impl_->upper_bound(); }
  void breakpoints(double t, const History& own, const History& other, double horizon,
                   std::vector<double>& out) const {
    impl_->breakpoints(t, own, other, horizon, out);
  }
  // Exact integral when the wrapped model offers one.
  std::optional<double> try_integral(double a, double b, const History& own,
                                     const History& other) const {
    return impl_->try_integral(a, b, own, other);
  }
  explicit operator bool() const noexcept { return static_cast<bool>(impl_); }

 private:
  struct Base {
    virtual ~Base() = default;
    virtual double rate(double, const History&, const History&) const = 0;
    virtual std::optional<double> upper_bound() const = 0;
    virtual void breakpoints(double, const History&, const History&, double,
                             std::vector<double>&) const = 0;
    virtual std::optional<double> try_integral(double, double, const History&,
                                               const History&) const = 0;
  };
  template <class M>
  struct Impl final : Base {
    explicit Impl(M model) : m(std::move(model)) {}
    double rate(double t, const History& a, const History& b) const override {
      return m.rate(t, a, b);
    }
    std::optional<double> upper_bound() const override { return m.upper_bound(); }
    void breakpoints(double t, const History& a, const History& b, double h,
                     std::vector<double>& out) const override {
      m.breakpoints(t, a, b, h, out);
    }
    std::optional<double> try_integral(double lo, double hi, const History& a,
                                       const History& b) const override {
      if constexpr (ExactlyIntegrable<M>) {
        return m.integral(lo, hi, a, b);
      } else {
        return std::nullopt;
      }
    }
    M m;
  };
  std::shared_ptr<const Base> impl_;
};

// Homogeneous rate, independent of history.
struct ConstantRate {
  double value = 1.0;

  double rate(double, const History&, const History&) const { return value; }
  std::optional<double> upper_bound() const { return value; }
  void breakpoints(double, const History&, const History&, double, std::vector<double>&) const {}
  double integral(double a, double b, const History&, const History&) const {
    return value * (b - a);
  }
};

// Piecewise-linear, left-continuous rate on a fixed time axis. Used for
// coarse rates computed along one particular train: it ignores histories and
// reads the value from its table. Knot k carries the left limit (which is the
// value at the knot) and the right limit.
class TabulatedRate {
 public:
  struct Knot {
    double t;
    double left;
    double right;
  };

  TabulatedRate() = default;
  explicit TabulatedRate(std::vector<Knot> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) throw Error(ErrorKind::kValidation, "tabulated rate needs knots");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i - 1].t < knots_[i].t))
        throw Error(ErrorKind::kOrdering, "tabulated rate knots must increase");
    times_.reserve(knots_.size());
    for (const auto& k : knots_) times_.push_back(k.t);
    bound_ = 0.0;
    for (const auto& k : knots_) bound_ = std::max({bound_, k.left, k.right});
  }

  double value_at(double t) const {
    if (t <= knots_.front().t) return knots_.front().left;
    if (t > knots_.back().t) return knots_.back().right;
    // First knot with time >= t; t lies in (knots[k-1].t, knots[k].t].
    const auto k = static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
    const auto& lo = knots_[k - 1];
    const auto& hi = knots_[k];
    if (t == hi.t) return hi.left;
    const double w = (t - lo.t) / (hi.t - lo.t);
    return lo.right + w * (hi.left - lo.right);
  }

  double rate(double t, const History&, const History&) const { return value_at(t); }
  std::optional<double> upper_bound() const { return bound_; }
  void breakpoints(double t, const History&, const History&, double horizon,
                   std::vector<double>& out) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    for (; it != times_.end() && *it <= horizon; ++it) out.push_back(*it);
  }

  // Exact integral of the piecewise-linear interpolant.
  double integral(double a, double b, const History&, const History&) const {
    if (!(b > a)) return 0.0;
    double total = 0.0;
    double lo = a;
    auto it = std::upper_bound(times_.begin(), times_.end(), a);
    while (lo < b) {
      const double hi = (it == times_.end()) ? b : std::min(b, *it);
      // Linear on (lo, hi]: evaluate both ends from the inside.
      total += 0.5 * (hi - lo) * (inner_right(lo) + value_at(hi));
      lo = hi;
      if (it != times_.end()) ++it;
    }
    return total;
  }

  std::span<const Knot> knots() const noexcept { return knots_; }

 private:
  // Right limit at t.
  double inner_right(double t) const {
    if (t < knots_.front().t) return knots_.front().left;
    if (t >= knots_.back().t) return knots_.back().right;
    const auto k = static_cast<std::size_t>(
        std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    const auto& lo = knots_[k - 1];
    const auto& hi = knots_[k];
    if (t == lo.t) return lo.right;
    const double w = (t - lo.t) / (hi.t - lo.t);
    return lo.right + w * (hi.left - lo.right);
  }

  std::vector<Knot> knots_;
  std::vector<double> times_;
  double bound_ = 0.0;
};

}  // namespace cte
