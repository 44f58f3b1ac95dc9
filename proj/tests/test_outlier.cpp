#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rhd/outlier.hpp"
#include "rhd/simlab.hpp"

namespace {

using rhd::RowMatrix;

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(rhd::sorted_quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(rhd::sorted_quantile(v, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(rhd::sorted_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(rhd::sorted_quantile(v, 1.0), 4.0);
  const std::vector<double> five{0.0, 1.0, 2.0, 3.0, 10.0};
  EXPECT_DOUBLE_EQ(rhd::sorted_quantile(five, 0.25), 1.0);
  EXPECT_DOUBLE_EQ(rhd::sorted_quantile(five, 0.75), 3.0);
}

struct Data {
  rhd::FunctionalSample sample;
  rhd::EigenSystem eig;
  rhd::DirectionSet dirs;
};

Data make(int n, std::uint64_t seed, double shift_sd = 0.0) {
  auto s = rhd::sim::generate_inliers(n, seed, rhd::sim::InlierLaw::gaussian);
  if (shift_sd != 0.0) {
    const auto extra = rhd::sim::generate_inliers(1, seed + 7777, rhd::sim::InlierLaw::gaussian);
    RowMatrix v(n + 1, s.grid_size());
    v.topRows(n) = s.values();
    // Pointwise standard deviation of the generator: sqrt(sum_j gamma_j phi_j(t)^2).
    const auto gamma = rhd::sim::kl_eigenvalues();
    const auto basis = rhd::sim::trig_basis_matrix(static_cast<int>(gamma.size()), s.grid());
    for (int k = 0; k < s.grid_size(); ++k) {
      double var = 0.0;
      for (std::size_t j = 0; j < gamma.size(); ++j) var += gamma[j] * basis(j, k) * basis(j, k);
      v(n, k) = extra.values()(0, k) + shift_sd * std::sqrt(var);
    }
    s = rhd::FunctionalSample(s.grid(), v);
  }
  Data d{s, rhd::fit_fpca(s, 6), {}};
  d.dirs = rhd::draw_directions(d.eig, 6, 1000, seed + 1);
  return d;
}

TEST(Outliers, FlaggedAreCandidatesOutsideAFence) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = make(150, seed);
    const double lambda = rhd::resolve_lambda(rhd::RegularizationSpec::quantile(0.95), d.dirs);
    const auto r = rhd::detect_outliers(d.eig, d.dirs, lambda, 1.5);
    ASSERT_FALSE(r.candidate_set.empty());
    const auto depth = rhd::sample_rhd(d.eig, d.dirs, lambda);
    const double mn = *std::min_element(depth.depths.begin(), depth.depths.end());
    EXPECT_DOUBLE_EQ(r.min_depth, mn);
    for (int c : r.candidate_set) EXPECT_EQ(depth.depths[c], mn);
    for (int i : r.flagged) {
      EXPECT_TRUE(std::find(r.candidate_set.begin(), r.candidate_set.end(), i) != r.candidate_set.end());
      bool outside = false;
      for (const auto& f : r.fences) {
        const double v = (d.eig.scores.row(i) * d.dirs.coefficients.row(f.direction).transpose())(0, 0);
        outside |= v < f.lower || v > f.upper;
      }
      EXPECT_TRUE(outside);
    }
    for (const auto& f : r.fences) {
      EXPECT_NEAR(f.iqr, f.q3 - f.q1, 1e-15);
      EXPECT_NEAR(f.lower, f.q1 - 1.5 * f.iqr, 1e-12);
      EXPECT_NEAR(f.upper, f.q3 + 1.5 * f.iqr, 1e-12);
    }
  }
}

TEST(Outliers, FlagsShrinkAsFactorGrows) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = make(120, seed * 3);
    const double lambda = rhd::resolve_lambda(rhd::RegularizationSpec::quantile(0.9), d.dirs);
    const std::vector<double> factors{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
    const auto reports = rhd::detect_outliers(d.eig, d.dirs, lambda, factors);
    for (std::size_t a = 0; a + 1 < reports.size(); ++a)
      for (int i : reports[a + 1].flagged)
        EXPECT_TRUE(std::find(reports[a].flagged.begin(), reports[a].flagged.end(), i) != reports[a].flagged.end());
  }
}

TEST(Outliers, ShiftedCurveIsTheOnlyFlag) {
  int hits = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const auto d = make(400, 100 + t, 10.0);
    const double lambda = rhd::resolve_lambda(rhd::RegularizationSpec::quantile(0.5), d.dirs);
    const auto r = rhd::detect_outliers(d.eig, d.dirs, lambda, 3.0);
    hits += r.flagged == std::vector<int>{400};
  }
  EXPECT_GE(hits, 95);
}

TEST(Outliers, RejectsTinySamplesAndBadFactors) {
  const auto tiny = rhd::sim::generate_inliers(3, 1);
  const auto eig = rhd::fit_fpca(tiny, 2);
  const auto dirs = rhd::draw_directions(eig, 2, 50, 1);
  EXPECT_THROW(rhd::detect_outliers(eig, dirs, 100.0, 1.5), std::invalid_argument);
  const auto e = make(20, 1);
  EXPECT_THROW(rhd::detect_outliers(e.eig, e.dirs, 100.0, 0.0), std::invalid_argument);
}

TEST(Outliers, IdenticalCurvesRefuseUpstream) {
  const auto g = rhd::make_uniform_grid(8);
  const rhd::FunctionalSample s(g, RowMatrix::Ones(10, 8));
  EXPECT_THROW(rhd::fit_fpca(s, 1), rhd::rank_error);
}

TEST(Calibration, NullSimulatorMatchesMoments) {
  const auto d = make(300, 9);
  const auto null = rhd::simulate_gaussian_null(d.eig, 4000, 5);
  const auto eig = rhd::fit_fpca(null, 3);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(eig.eigenvalues[j] / d.eig.eigenvalues[j], 1.0, 0.15);
  const auto m = rhd::sample_mean(null);
  for (int k = 0; k < null.grid_size(); ++k) EXPECT_NEAR(m(k), d.eig.mean(k), 0.15);
}

TEST(Calibration, PicksClosestGridFactorDeterministically) {
  const auto s = rhd::sim::generate_inliers(100, 4, rhd::sim::InlierLaw::gaussian);
  const auto spec = rhd::RegularizationSpec::quantile(0.95);
  const auto a = rhd::calibrate_factor(s, 6, 300, spec, 8, 42);
  const auto b = rhd::calibrate_factor(s, 6, 300, spec, 8, 42);
  EXPECT_EQ(a.rates, b.rates);
  EXPECT_EQ(a.factor, b.factor);
  ASSERT_EQ(a.rates.size(), 5u);
  for (std::size_t r = 0; r + 1 < a.rates.size(); ++r) EXPECT_GE(a.rates[r], a.rates[r + 1]);
  std::size_t best = 0;
  for (std::size_t r = 0; r < 5; ++r)
    if (std::abs(a.rates[r] - 0.007) <= std::abs(a.rates[best] - 0.007)) best = r;
  EXPECT_EQ(a.factor, a.grid_tried[best]);
  EXPECT_EQ(a.achieved_rate, a.rates[best]);
  EXPECT_EQ(a.B, 8);
}

TEST(Calibration, TiesGoToLargerFactor) {
  const auto s = rhd::sim::generate_inliers(60, 4, rhd::sim::InlierLaw::gaussian);
  // Factors this large never flag anything, so all rates tie at zero.
  const std::vector<double> grid{50.0, 60.0, 70.0};
  const auto c = rhd::calibrate_factor(s, 4, 200, rhd::RegularizationSpec::quantile(0.9), 3, 1, grid);
  EXPECT_EQ(c.rates, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(c.factor, 70.0);
}

TEST(Calibration, ThreadCountDoesNotChangeResults) {
  const auto s = rhd::sim::generate_inliers(80, 6, rhd::sim::InlierLaw::gaussian);
  const auto spec = rhd::RegularizationSpec::quantile(0.95);
  rhd::set_thread_count(1);
  const auto a = rhd::calibrate_factor(s, 5, 200, spec, 6, 3);
  rhd::set_thread_count(4);
  const auto b = rhd::calibrate_factor(s, 5, 200, spec, 6, 3);
  rhd::set_thread_count(0);
  EXPECT_EQ(a.rates, b.rates);
}

}  // namespace
