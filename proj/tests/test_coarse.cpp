#include <gtest/gtest.h>

#include <functional>

#include "cte/coarse.hpp"
#include "cte/simulate.hpp"
#include "test_support.hpp"

using namespace cte;

namespace {

MonteCarloConfig quick_cfg() {
  MonteCarloConfig c;
  c.n_samples = 300;
  c.dtau_interp = 0.05;
  c.dt_int = 0.01;
  return c;
}

// I_n by nested numerical integration: I_n(t0, t) = int_t0^t I_{n-1}(t0, u) du.
double nested_volume(int n, double t0, double t) {
  if (n == 0) return 1.0;
  return integrate_smooth([&](double u) { return nested_volume(n - 1, t0, u); }, t0, t, 1e-13)
      .value;
}

}  // namespace

TEST(PhaseSpaceVolume, Examples) {
  EXPECT_EQ(phase_space_volume(0, 1.0, 3.0), 1.0);
  EXPECT_NEAR(phase_space_volume(1, 1.0, 3.5), 2.5, 1e-15);
  EXPECT_NEAR(phase_space_volume(3, 0.0, 2.0), 8.0 / 6.0, 1e-14);
  EXPECT_NEAR(nested_volume(3, 0.0, 2.0), 1.333333, 1e-6);
  EXPECT_THROW(phase_space_volume(-1, 0, 1), Error);
}

TEST(PhaseSpaceVolume, MatchesNestedQuadrature) {
  for (int n = 0; n <= 5; ++n)
    EXPECT_NEAR(phase_space_volume(n, 0.5, 2.3) / nested_volume(n, 0.5, 2.3), 1.0, 1e-6) << n;
}

TEST(MonteCarloConfig, Validation) {
  MonteCarloConfig c;
  c.dtau_interp = c.dt_int / 2;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "dtau_interp");
  }
  c = {};
  c.n_samples = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(McCoarseRate, SourceIndependentTarget) {
  GaussianModelParams p;
  p.m = 0.0;
  const std::vector<double> hist{9.2, 9.7};
  const auto e = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, quick_cfg());
  EXPECT_NEAR(e.value, p.lambda_base, 1e-12);
  EXPECT_LT(e.stderr_, 1e-9);
}

TEST(McCoarseRate, NoSource) {
  GaussianModelParams p;
  p.lambda_y = 0.0;
  const std::vector<double> hist{9.5};
  const auto e = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, quick_cfg());
  EXPECT_EQ(e.value, p.lambda_base);
  EXPECT_EQ(e.terms_used, 1);
}

TEST(McCoarseRate, ConstantJointRateIsReturnedExactly) {
  const PoissonDrivenTarget<ConstantRate> m{ConstantRate{2.5}, 1.0, 1.0};
  const std::vector<double> hist{9.3, 9.8};
  const auto e = mc_coarse_rate(m, hist, 10.0, quick_cfg());
  EXPECT_NEAR(e.value, 2.5, 1e-12);
}

TEST(McCoarseRate, AgreesWithFilterForOneRecentSpike) {
  const GaussianModelParams p;
  MonteCarloConfig cfg;
  cfg.seed = 5;
  const std::vector<double> hist{9.7};
  const auto e = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, cfg);
  const double f = filter_oracle_rate(p, hist, -kUnbounded, 10.0, 1e-3, p.t_cut);
  // filter discretisation error is first order in du, about 0.2% here
  EXPECT_LT(std::abs(e.value - f), 3.0 * std::hypot(e.stderr_, 0.002 * f));
}

TEST(McCoarseRate, SeriesTruncation) {
  const GaussianModelParams p;  // lambda_y * 2 t_cut = 2
  const std::vector<double> hist{9.4};
  const auto e = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, quick_cfg());
  EXPECT_FALSE(e.truncated);
  EXPECT_LT(e.tail_bound, quick_cfg().tol_k);
  MonteCarloConfig capped = quick_cfg();
  capped.k_max = 1;
  const auto t = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, capped);
  EXPECT_TRUE(t.truncated);
  EXPECT_GT(t.tail_bound, capped.tol_k);
}

TEST(McCoarseRate, Reproducible) {
  const GaussianModelParams p;
  const std::vector<double> hist{9.1, 9.6};
  auto cfg = quick_cfg();
  const auto a = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, cfg);
  cfg.workers = 3;
  const auto b = mc_coarse_rate(gaussian_marginal(p), hist, 10.0, cfg);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(InterpolationTable, EntriesMatchDirectEvaluation) {
  const GaussianModelParams p;
  auto cfg = quick_cfg();
  cfg.n_x_precompute = 1;
  const auto m = gaussian_marginal(p);
  const auto tab = interpolation_table(m, cfg);
  const double t = 2.0 * p.t_cut;
  EXPECT_EQ(tab.empty_entry().value, mc_coarse_rate(m, {}, t, cfg, 0.0).value);
  const auto off = tab.offsets();
  for (std::size_t i : {std::size_t{0}, off.size() / 2, off.size() - 1}) {
    const std::vector<double> h{t - off[i]};
    const double direct = mc_coarse_rate(m, h, t, cfg, 0.0).value;
    EXPECT_EQ(tab.one_spike()[i].value, direct);
    const std::vector<double> o{off[i]};
    EXPECT_EQ(tab.lookup(o).first, direct);  // exact at nodes
  }
}

TEST(InterpolationTable, SymmetricTwoSpikeEntries) {
  const GaussianModelParams p;
  auto cfg = quick_cfg();
  cfg.n_samples = 50;
  cfg.dtau_interp = 0.1;
  const auto tab = interpolation_table(gaussian_marginal(p), cfg);
  const std::size_t g = tab.offsets().size();
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j)
      EXPECT_EQ(tab.two_spike(i, j).value, tab.two_spike(j, i).value);
  const std::vector<double> a{0.33, 0.71}, b{0.71, 0.33};
  EXPECT_NEAR(tab.lookup(a).first, tab.lookup(b).first, 1e-12);
}

TEST(InterpolationTable, GridRefinement) {
  const GaussianModelParams p;
  MonteCarloConfig cfg;
  cfg.n_x_precompute = 1;
  cfg.dtau_interp = 0.02;
  const auto coarse = interpolation_table(gaussian_marginal(p), cfg);
  cfg.dtau_interp = 0.01;
  const auto fine = interpolation_table(gaussian_marginal(p), cfg);
  for (double d : {0.013, 0.137, 0.291, 0.455, 0.503, 0.677, 0.889}) {
    const std::vector<double> o{d};
    const double a = coarse.lookup(o).first, b = fine.lookup(o).first;
    EXPECT_LT(std::abs(a - b) / b, 0.01) << d;
  }
}

TEST(CoarseRateAlongTrain, EmptyTrainIsConstant) {
  const GaussianModelParams p;
  auto cfg = quick_cfg();
  cfg.n_x_precompute = 0;
  const SpikeTrain tr(0.0, 6.0, {});
  const auto track = coarse_rate_along_train(gaussian_marginal(p), tr, cfg);
  const auto tab = interpolation_table(gaussian_marginal(p), cfg);
  for (const auto& s : track.samples) {
    if (s.t >= 2.0 * p.t_cut) {
      EXPECT_EQ(s.rate, tab.empty_entry().value) << s.t;
    }
  }
}

TEST(CoarseRateAlongTrain, PartitionAtEntriesAndExits) {
  const GaussianModelParams p;
  auto cfg = quick_cfg();
  cfg.n_samples = 50;
  const SpikeTrain tr(0.0, 8.0, {2.5, 3.1, 6.4});
  const auto track = coarse_rate_along_train(gaussian_marginal(p), tr, cfg);
  // record start, end of the record-start transient, entries and exits
  const std::vector<double> want{0.0, 2.0, 2.5, 3.1, 3.5, 4.1, 6.4, 7.4, 8.0};
  ASSERT_EQ(track.partition.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(track.partition[i], want[i], 1e-12);
  EXPECT_EQ(track.samples.size(), 800u);
}

TEST(CoarseRateAlongTrain, LocalTableNodesAreDirectValues) {
  const GaussianModelParams p;
  auto cfg = quick_cfg();
  cfg.n_x_precompute = 0;
  cfg.dt_int = 0.05;
  cfg.dtau_interp = 0.05;
  // one spike in the window for t in (3.0, 4.0]; nodes fall on the dt_int grid
  const SpikeTrain tr(0.0, 5.0, {3.0});
  const auto m = gaussian_marginal(p);
  const auto track = coarse_rate_along_train(m, tr, cfg);
  const std::vector<double> h{3.0};
  for (const auto& s : track.samples) {
    if (s.t > 3.0 + 1e-9 && s.t < 4.0 - 1e-9) {
      const double t = 3.0 + 0.05 * std::round((s.t - 3.0) / 0.05);
      EXPECT_NEAR(s.rate, mc_coarse_rate(m, h, t, cfg, 0.0).value, 1e-9) << s.t;
    }
  }
}

TEST(CoarseRateAlongTrain, TimeAverageMatchesSpikeRate) {
  const GaussianModelParams p;
  SimulationConfig sc;
  sc.duration = 400;
  sc.seed = 21;
  const auto rec = simulate_coupled(GaussianTarget{p}, gaussian_source(p), sc);
  auto cfg = quick_cfg();
  cfg.n_samples = 200;
  const auto track = coarse_rate_along_train(gaussian_marginal(p), rec.x(), cfg);
  // batch means of (count - integrated rate) per 20 s
  const History none{};
  std::vector<double> d;
  const auto ev = rec.x().events();
  for (double a = 0; a < 400; a += 20) {
    const double n = static_cast<double>(std::lower_bound(ev.begin(), ev.end(), a + 20) -
                                         std::lower_bound(ev.begin(), ev.end(), a));
    d.push_back(n - track.rate.integral(a, a + 20, none, none));
  }
  const auto ms = cte::testing::mean_se(d);
  EXPECT_LT(std::abs(ms.mean), 3.0 * ms.se);
}

TEST(FilterOracle, SourceIndependentTarget) {
  GaussianModelParams p;
  p.m = 0.0;
  const std::vector<double> ev{1.0, 1.3, 4.2};
  EXPECT_NEAR(filter_oracle_rate(p, ev, 0.0, 5.0, 0.01), p.lambda_base, 1e-12);
}

TEST(FilterOracle, VanishingSourceRate) {
  GaussianModelParams p;
  for (double ly : {1e-2, 1e-3, 1e-4}) {
    p.lambda_y = ly;
    const double v = filter_oracle_rate(p, {}, 0.0, 10.0, 0.01);
    EXPECT_LT(std::abs(v - p.lambda_base), 5.0 * ly) << ly;
  }
}

TEST(FilterOracle, GridRefinement) {
  const GaussianModelParams p;
  const std::vector<double> ev{0.4, 3.3, 6.45, 7.2, 9.7};
  for (double t : {5.0, 7.5, 10.0}) {
    const double a = filter_oracle_rate(p, ev, 0.0, t, 0.004);
    const double b = filter_oracle_rate(p, ev, 0.0, t, 0.002);
    EXPECT_LT(std::abs(a - b) / b, 0.005) << t;
  }
}

TEST(FilterOracle, GridStepValidated) {
  const GaussianModelParams p;
  try {
    filter_oracle_rate(p, {}, 0.0, 1.0, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "grid_du");
  }
}

TEST(FilterOracle, AlongTrainMatchesPointwise) {
  const GaussianModelParams p;
  const SpikeTrain tr(0.0, 10.0, {0.4, 3.3, 6.45, 7.2, 9.7});
  const auto rate = filter_coarse_rate_along_train(p, tr, 0.005, 0.005);
  const History none{};
  for (double t : {0.4, 2.0, 6.45, 7.205, 9.9}) {
    const double direct = filter_oracle_rate(p, tr.events(), 0.0, t, 0.005);
    EXPECT_NEAR(rate.rate(t, none, none), direct, 1e-9) << t;
  }
}
