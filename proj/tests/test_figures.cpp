#include <gtest/gtest.h>

#include "cte/figures.hpp"

using namespace cte;

namespace {

Figure2Config filter_cfg() {
  Figure2Config c;
  c.method = CoarseMethod::kFilter;
  c.grid_step = 0.01;
  return c;
}

}  // namespace

TEST(Figure1, Examples) {
  const std::vector<double> a{0.5}, lyt{0.05};
  const auto rows = figure1_data(a, lyt);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].normalized, std::log(-std::log(0.5) / 0.025), 1e-12);
  // the quoted literal is good to about five significant digits
  EXPECT_NEAR(rows[0].normalized, 3.322388, 1e-5 * 3.322388);
  EXPECT_FALSE(rows[0].saturated);
}

TEST(Figure1, DecreasingInProduct) {
  const std::vector<double> a{0.2, 0.5, 0.9};
  std::vector<double> lyt;
  for (int i = 1; i <= 20; ++i) lyt.push_back(0.01 * i);
  const auto rows = figure1_data(a, lyt);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].a == rows[i - 1].a) {
      EXPECT_LT(rows[i].normalized, rows[i - 1].normalized);
    }
}

TEST(Figure1, SaturatesNearOne) {
  const std::vector<double> a{0.9, 0.999999, 1.0 - 1e-10, 1.0}, lyt{0.1};
  const auto rows = figure1_data(a, lyt);
  EXPECT_LT(rows[0].normalized, rows[1].normalized);
  EXPECT_FALSE(rows[1].saturated);
  EXPECT_TRUE(rows[2].saturated);
  EXPECT_TRUE(rows[3].saturated);
  EXPECT_TRUE(std::isinf(rows[3].normalized));
}

TEST(Figure1, Reproducible) {
  const std::vector<double> a{0.1, 0.3, 0.7}, lyt{0.01, 0.2};
  const auto x = figure1_data(a, lyt), y = figure1_data(a, lyt);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].normalized, y[i].normalized);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(figure1_data(bad, lyt), Error);
}

TEST(Figure1, OverlayPoint) {
  const RefractoryModelParams p{0.05, 0.5, 1.0, 1.0};
  const auto o = figure1_overlay_point(p, 5e4, 4);
  EXPECT_LE(std::abs(o.estimate - o.closed_form), 4.0 * o.stderr_ + 0.1 * o.closed_form);
}

TEST(Figure2, UncoupledTargetGivesZeroCurve) {
  GaussianModelParams p;
  p.m = 0.0;
  const auto d = figure2_data(3, 30, p, filter_cfg());
  for (const auto& s : d.samples) EXPECT_NEAR(s.cumulative, 0.0, 1e-9);
  EXPECT_NEAR(d.te.total, 0.0, 1e-9);
}

TEST(Figure2, SignCouplingAndPointA) {
  const GaussianModelParams p;
  const auto d = figure2_data(11, 60, p, filter_cfg());
  ASSERT_FALSE(d.samples.empty());
  for (const auto& s : d.samples) {
    EXPECT_FALSE(s.log_ratio > 0 && s.nonspiking_rate > 0) << s.t;
    EXPECT_FALSE(s.log_ratio < 0 && s.nonspiking_rate < 0) << s.t;
  }
  const auto coarse = filter_coarse_rate_along_train(p, d.record.x(), 0.005,
                                                     0.005);
  const GaussianTarget joint{p};
  const auto xe = d.record.x().events();
  const auto ye = d.record.y().events();
  ASSERT_FALSE(d.te.jump_contributions.empty());
  for (const auto& j : d.te.jump_contributions) {
    const History hx = make_history(xe, 0.0, j.t, kUnbounded);
    const History hy = make_history(ye, 0.0, j.t, kUnbounded);
    const double lj = joint.rate(j.t, hx, hy), lc = coarse.rate(j.t, hx, hy);
    if (lj > lc) {
      EXPECT_GT(j.delta, 0.0) << j.t;
    } else if (lj < lc) {
      EXPECT_LT(j.delta, 0.0) << j.t;
    }
  }
}

TEST(Figure2, DeterministicAndConsistent) {
  const GaussianModelParams p;
  const auto a = figure2_data(5, 40, p, filter_cfg());
  const auto b = figure2_data(5, 40, p, filter_cfg());
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    EXPECT_EQ(a.samples[i].cumulative, b.samples[i].cumulative);
  EXPECT_NEAR(a.te.total, a.te.jump_sum() + a.te.nonspiking_integral, 1e-9);
  const std::vector<double> end{40.0};
  EXPECT_NEAR(cumulative_te_curve(a.te, end)[0].value, a.te.total, 1e-9);
  // the curve only jumps at target spikes
  for (std::size_t i = 1; i < a.samples.size(); ++i) {
    const double t0 = a.samples[i - 1].t, t1 = a.samples[i].t;
    const auto xe = a.record.x().events();
    const bool spike = std::lower_bound(xe.begin(), xe.end(), t0) !=
                       std::lower_bound(xe.begin(), xe.end(), t1);
    if (!spike) {
      EXPECT_LT(std::abs(a.samples[i].cumulative - a.samples[i - 1].cumulative), 0.2) << t0;
    }
  }
}

TEST(Figure2, MonteCarloMethod) {
  const GaussianModelParams p;
  Figure2Config c;
  c.mc.n_samples = 100;
  c.mc.dtau_interp = 0.1;
  c.mc.dt_int = 0.01;
  const auto d = figure2_data(2, 8, p, c);
  EXPECT_EQ(d.windows.s, p.t_cut);
  for (const auto& s : d.samples) {
    EXPECT_GT(s.lambda_coarse, 0.0);
    EXPECT_FALSE(s.log_ratio > 0 && s.nonspiking_rate > 0);
    EXPECT_FALSE(s.log_ratio < 0 && s.nonspiking_rate < 0);
  }
}
