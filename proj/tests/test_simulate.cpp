#include <gtest/gtest.h>

#include "cte/models.hpp"
#include "cte/simulate.hpp"
#include "test_support.hpp"

using namespace cte;
using cte::testing::mean_se;

namespace {

struct RateSummary {
  double x;
  double y;
  double x_se;
};

RateSummary mean_rates(Scheme scheme, double dt, int seeds, double duration) {
  const GaussianModelParams p;
  std::vector<double> xr;
  double y = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SimulationConfig c;
    c.duration = duration;
    c.seed = 100 + static_cast<std::uint64_t>(s);
    c.scheme = scheme;
    c.dt = dt;
    const auto rec = simulate_coupled(GaussianTarget{p}, gaussian_source(p), c);
    xr.push_back(static_cast<double>(rec.x().size()) / duration);
    y += static_cast<double>(rec.y().size()) / duration;
  }
  const auto ms = mean_se(xr);
  return {ms.mean, y / seeds, ms.se};
}

}  // namespace

TEST(SimulateHomogeneousPoisson, ZeroRate) {
  EXPECT_TRUE(simulate_homogeneous_poisson(0.0, 10.0, 1).empty());
}

TEST(SimulateHomogeneousPoisson, Count) {
  const auto tr = simulate_homogeneous_poisson(2.0, 1e4, 3);
  EXPECT_NEAR(static_cast<double>(tr.size()), 20000.0, 3.0 * std::sqrt(20000.0));
}

TEST(SimulateHomogeneousPoisson, KolmogorovSmirnov) {
  const auto tr = simulate_homogeneous_poisson(1.0, 1e5, 11);
  const auto iv = cte::testing::intervals(tr.events(), tr.start_time());
  EXPECT_LT(cte::testing::ks_exponential(iv, 1.0), cte::testing::ks_critical_1pct(iv.size()));
}

TEST(SimulateCoupled, IndependentPoissonCounts) {
  std::vector<double> nx, ny;
  for (std::uint64_t s = 0; s < 100; ++s) {
    SimulationConfig c;
    c.seed = s;
    const auto rec = simulate_coupled(ConstantRate{2.0}, ConstantRate{2.0}, c);
    nx.push_back(static_cast<double>(rec.x().size()));
    ny.push_back(static_cast<double>(rec.y().size()));
  }
  const double band = 3.0 * std::sqrt(200.0);
  EXPECT_NEAR(mean_se(nx).mean, 200.0, band);
  EXPECT_NEAR(mean_se(ny).mean, 200.0, band);
}

TEST(SimulateCoupled, Reproducible) {
  const GaussianModelParams p;
  SimulationConfig c;
  c.duration = 500;
  c.seed = 77;
  const auto a = simulate_coupled(GaussianTarget{p}, gaussian_source(p), c);
  const auto b = simulate_coupled(GaussianTarget{p}, gaussian_source(p), c);
  ASSERT_EQ(a.x().size(), b.x().size());
  ASSERT_EQ(a.y().size(), b.y().size());
  for (std::size_t i = 0; i < a.x().size(); ++i) EXPECT_EQ(a.x().events()[i], b.x().events()[i]);
  for (std::size_t i = 0; i < a.y().size(); ++i) EXPECT_EQ(a.y().events()[i], b.y().events()[i]);
  c.seed = 78;
  const auto d = simulate_coupled(GaussianTarget{p}, gaussian_source(p), c);
  EXPECT_NE(a.x().size() + 1000 * a.y().size(), d.x().size() + 1000 * d.y().size());
}

TEST(SimulateCoupled, RefractoryConstraints) {
  const RefractoryModelParams p{0.5, 0.6, 1.0, 1.5};
  SimulationConfig c;
  c.duration = 2e4;
  const auto rec = simulate_coupled(RefractoryTarget{p}, RefractorySource{p}, c);
  const auto ye = rec.y().events();
  const auto xe = rec.x().events();
  ASSERT_GT(ye.size(), 1000u);
  for (std::size_t i = 1; i < ye.size(); ++i) ASSERT_GT(ye[i] - ye[i - 1], p.tau_r);
  for (std::size_t i = 1; i < xe.size(); ++i) ASSERT_GT(xe[i] - xe[i - 1], p.tau_r);
  // every target spike sits inside a source window
  for (double x : xe) {
    const auto it = std::lower_bound(ye.begin(), ye.end(), x);
    ASSERT_NE(it, ye.begin());
    ASSERT_LE(x - *(it - 1), p.tau);
  }
  EXPECT_NO_THROW(validate_joint_record(rec));
}

TEST(SimulateCoupled, PriorHistoryIsSeen) {
  const RefractoryModelParams p{0.5, 0.6, 1.0, 1.5};
  SimulationConfig c;
  c.start_time = 10.0;
  c.duration = 1.0;
  c.prior = make_joint_record(0.0, 10.0, {}, {9.9});
  // source is refractory until 11.4, so no y events
  const auto rec = simulate_coupled(RefractoryTarget{p}, RefractorySource{p}, c);
  EXPECT_TRUE(rec.y().empty());
}

TEST(SimulateCoupled, MissingBoundAndCoarseStep) {
  SimulationConfig c;
  c.scheme = Scheme::kFixedStep;
  c.dt = 0.5;
  try {
    simulate_coupled(ConstantRate{2.0}, ConstantRate{2.0}, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStepTooCoarse);
  }
}

TEST(SimulateCoupled, ThinningMatchesFixedStep) {
  const auto thin = mean_rates(Scheme::kThinning, 0.0, 10, 5000);
  for (double dt : {1e-2, 1e-3}) {
    const auto fixed = mean_rates(Scheme::kFixedStep, dt, 10, 5000);
    EXPECT_LT(std::abs(thin.x - fixed.x), 3.0 * std::hypot(thin.x_se, fixed.x_se)) << dt;
  }
}

TEST(SimulateCoupled, FixedStepBiasIsFirstOrder) {
  // The source count carries the clear O(dt) bias: x takes precedence in a
  // step where both channels would fire.
  const auto thin = mean_rates(Scheme::kThinning, 0.0, 20, 1e4);
  const auto coarse = mean_rates(Scheme::kFixedStep, 0.04, 20, 1e4);
  const auto fine = mean_rates(Scheme::kFixedStep, 0.02, 20, 1e4);
  // 0.003 is about one combined standard error of the three count means.
  EXPECT_LE(std::abs(fine.y - thin.y), 0.5 * std::abs(coarse.y - thin.y) + 0.003);
}
