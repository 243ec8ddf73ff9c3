#include <gtest/gtest.h>

#include <random>

#include "cte/models.hpp"

using namespace cte;

namespace {

RefractoryModelParams refr() { return {0.1, 0.5, 1.0, 1.5}; }
GaussianModelParams gauss() { return {}; }

History hist(const std::vector<double>& v) { return History{v}; }

}  // namespace

TEST(RefractoryJointRates, Examples) {
  const auto p = refr();
  EXPECT_EQ(refractory_joint_rates(p, 2.0, std::nullopt, 1.5).lambda_y_given_x, 0.0);
  EXPECT_NEAR(refractory_joint_rates(p, 2.0, 0.0, 1.6).lambda_x_given_y, -std::log(0.5), 1e-12);
  EXPECT_NEAR(refractory_joint_rates(p, 2.0, 0.0, 1.6).lambda_x_given_y, 0.693147, 1e-6);
  EXPECT_EQ(refractory_joint_rates(p, 3.0, std::nullopt, 1.0).lambda_x_given_y, 0.0);
  EXPECT_EQ(refractory_joint_rates(p, 3.0, std::nullopt, std::nullopt).lambda_y_given_x, 0.1);
}

TEST(RefractoryJointRates, TargetRefractoryAfterOwnSpike) {
  const auto p = refr();
  // target fired inside the current source window: no second spike
  EXPECT_EQ(refractory_joint_rates(p, 2.0, 1.8, 1.6).lambda_x_given_y, 0.0);
}

TEST(RefractoryCoarseRate, Examples) {
  const auto p = refr();
  EXPECT_EQ(refractory_coarse_rate(p, 1.0), 0.0);
  EXPECT_NEAR(refractory_coarse_rate(p, 2.0), (1.0 - std::sqrt(0.5)) * 0.1, 1e-15);
  EXPECT_NEAR(refractory_coarse_rate(p, 2.0), 0.0292893, 1e-7);
  EXPECT_NEAR(refractory_coarse_rate(p, 3.0), 0.05, 1e-15);
  EXPECT_NEAR(refractory_coarse_rate(p, std::nullopt), 0.05, 1e-15);
}

TEST(RefractoryCoarseRate, ContinuousAndMonotone) {
  const auto p = refr();
  for (double edge : {p.tau_r, p.tau_r + p.tau}) {
    const double l = refractory_coarse_rate(p, std::nextafter(edge, 0.0));
    const double r = refractory_coarse_rate(p, edge);
    EXPECT_NEAR(l, r, 1e-12);
  }
  double prev = 0.0;
  for (double dt = 0.0; dt < 5.0; dt += 1e-3) {
    const double v = refractory_coarse_rate(p, dt);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
}

TEST(RefractoryCoarseRate, ValidityFlag) {
  const auto p = refr();
  const std::vector<double> close{1.0, 2.0};  // spacing 1 < tau_r + tau
  EXPECT_FALSE(refractory_coarse_rate(p, 3.0, hist(close)).valid);
  const std::vector<double> far{0.0, 3.0};
  EXPECT_TRUE(refractory_coarse_rate(p, 4.0, hist(far)).valid);
}

TEST(RefractoryClosedForm, Examples) {
  RefractoryModelParams p{0.1, 0.5, 1.0, 1.5};
  EXPECT_NEAR(refractory_te_rate_closed_form(p).rate, 0.05 * std::log(-std::log(0.5) / 0.05),
              1e-12);
  // the quoted literals are good to about five significant digits
  EXPECT_NEAR(refractory_te_rate_closed_form(p).rate, 0.131462, 1e-5 * 0.131462);
  p = {0.01, 0.9, 1.0, 1.5};
  EXPECT_NEAR(refractory_te_rate_closed_form(p).rate, 0.009 * std::log(-std::log(0.1) / 0.009),
              1e-13);
  EXPECT_NEAR(refractory_te_rate_closed_form(p).rate, 0.0499007, 1e-5 * 0.0499007);
  // -ln(1-a) = a lambda_y tau
  p = {0.0, 0.5, 1.0, 1.5};
  p.lambda_y = -std::log1p(-p.a) / (p.a * p.tau);
  EXPECT_NEAR(refractory_te_rate_closed_form(p).rate, 0.0, 1e-15);
}

TEST(RefractoryClosedForm, NormalizedDependsOnProductOnly) {
  for (double c : {0.1, 2.0, 7.5}) {
    const RefractoryModelParams p{0.05, 0.3, 1.0, 1.0};
    const RefractoryModelParams q{0.05 * c, 0.3, 1.0 / c, 1.0 / c};
    EXPECT_NEAR(refractory_te_rate_closed_form(p).normalized,
                refractory_te_rate_closed_form(q).normalized, 1e-12);
  }
}

TEST(RefractoryParams, Validation) {
  RefractoryModelParams p = refr();
  p.a = 1.5;
  try {
    p.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "a");
  }
  p = refr();
  p.tau_r = 0.5;
  EXPECT_THROW(p.validate(), Error);
}

TEST(GaussianTargetRate, Examples) {
  const auto p = gauss();
  EXPECT_NEAR(gaussian_target_rate(p, 0.5), 5.5 - 5.0 * std::exp(-12.5), 1e-12);
  EXPECT_NEAR(gaussian_target_rate(p, 0.5), 5.4999814, 1e-7);
  EXPECT_EQ(gaussian_target_rate(p, 1.0), 0.5);
  EXPECT_EQ(gaussian_target_rate(p, 2.0), 0.5);
  EXPECT_EQ(gaussian_target_rate(p, std::nullopt), 0.5);
}

TEST(GaussianTargetRate, ContinuousAtEdges) {
  const auto p = gauss();
  EXPECT_LT(std::abs(gaussian_target_rate(p, 1e-300) - 0.5), 1e-12);
  EXPECT_LT(std::abs(gaussian_target_rate(p, std::nextafter(1.0, 0.0)) - 0.5), 1e-12);
  EXPECT_LT(std::abs(gaussian_target_rate(p, std::nextafter(1.0, 2.0)) - 0.5), 1e-12);
}

TEST(GaussianTarget, ExactIntegralMatchesRiemann) {
  const GaussianTarget g{gauss()};
  const std::vector<double> ys{3.0};
  const History none{};
  const History hy = hist(ys);
  const double a = 2.7, b = 4.4;
  const int n = 1'000'000;
  double s = 0.0;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) s += g.rate(a + (i + 0.5) * h, none, hy);
  EXPECT_NEAR(g.integral(a, b, none, hy), s * h, 1e-8);
}

TEST(RateBreakpoints, Examples) {
  const History none{};
  const std::vector<double> y3{3.0};
  EXPECT_EQ(rate_breakpoints(GaussianTarget{gauss()}, 3.0, none, hist(y3), 10.0),
            std::vector<double>{4.0});
  const std::vector<double> x0{0.0}, y02{0.2};
  const auto bp = rate_breakpoints(RefractoryTarget{refr()}, 0.2, hist(x0), hist(y02), 5.0);
  ASSERT_EQ(bp.size(), 2u);
  EXPECT_NEAR(bp[0], 1.2, 1e-15);
  EXPECT_NEAR(bp[1], 1.5, 1e-15);
  EXPECT_TRUE(rate_breakpoints(RefractoryTarget{refr()}, 1.0, none, none, 5.0).empty());
  EXPECT_TRUE(rate_breakpoints(GaussianTarget{gauss()}, 1.0, none, none, 5.0).empty());
}

TEST(RateUpperBound, Examples) {
  EXPECT_DOUBLE_EQ(rate_upper_bound(GaussianTarget{gauss()}), 5.5);
  EXPECT_NEAR(rate_upper_bound(RefractoryTarget{refr()}), 0.693147, 1e-6);
  EXPECT_EQ(rate_upper_bound(RefractorySource{refr()}), 0.1);
}

TEST(RateUpperBound, RespectedOnRandomProbes) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const GaussianTarget g{gauss()};
  const RefractoryTarget rt{refr()};
  const RefractorySource rs{refr()};
  const RefractoryCoarse rc{refr()};
  const double bg = rate_upper_bound(g), bt = rate_upper_bound(rt), bs = rate_upper_bound(rs),
               bc = rate_upper_bound(rc);
  std::vector<double> xs(1), ys(1);
  for (int i = 0; i < 1'000'000; ++i) {
    const double t = 3.0;
    xs[0] = t - u(gen);
    ys[0] = t - u(gen);
    const History hx{xs}, hy{ys};
    ASSERT_LE(g.rate(t, hx, hy), bg);
    ASSERT_LE(rt.rate(t, hx, hy), bt);
    ASSERT_LE(rs.rate(t, hy, hx), bs);
    ASSERT_LE(rc.rate(t, hx, hy), bc);
  }
}
