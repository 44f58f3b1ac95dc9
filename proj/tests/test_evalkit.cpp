#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rhd/evalkit.hpp"

namespace {

using P = std::array<double, 2>;

TEST(Ranks, MinimumRankForTies) {
  const std::vector<double> d{0.1, 0.1, 0.3};
  const auto t = rhd::normalized_ranks(d);
  EXPECT_EQ(t.ranks, (std::vector<int>{1, 1, 3}));
  EXPECT_DOUBLE_EQ(t.normalized[0], 1.0 / 3);
  EXPECT_DOUBLE_EQ(t.normalized[1], 1.0 / 3);
  EXPECT_DOUBLE_EQ(t.normalized[2], 1.0);
}

TEST(Ranks, IncreasingAndConstant) {
  EXPECT_EQ(rhd::normalized_ranks(std::vector<double>{0.1, 0.2, 0.5, 0.7}).ranks, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(rhd::normalized_ranks(std::vector<double>{0.4, 0.4, 0.4}).ranks, (std::vector<int>{1, 1, 1}));
  EXPECT_THROW(rhd::normalized_ranks(std::vector<double>{}), std::invalid_argument);
}

TEST(Ranks, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<double> d, e;
  for (int i = 0; i < 100; ++i) {
    d.push_back(pick(rng) / 10.0);
    e.push_back(std::exp(3 * d.back()) - 7);
  }
  EXPECT_EQ(rhd::normalized_ranks(d).ranks, rhd::normalized_ranks(e).ranks);
}

TEST(Metrics, PerfectDetection) {
  const std::vector<bool> truth{false, true, false, false};
  const std::vector<int> flagged{1};
  const auto m = rhd::detection_metrics(flagged, truth);
  EXPECT_EQ(m.p_c, 1.0);
  EXPECT_EQ(m.p_f, 0.0);
}

TEST(Metrics, NothingFlagged) {
  const std::vector<bool> truth{false, true, false, false};
  const auto m = rhd::detection_metrics(std::vector<int>{}, truth);
  EXPECT_EQ(m.p_c, 0.0);
  EXPECT_EQ(m.p_f, 0.0);
}

TEST(Metrics, OneWrongInlier) {
  std::vector<bool> truth(10, false);
  truth[4] = true;
  const auto m = rhd::detection_metrics(std::vector<int>{7}, truth);
  EXPECT_EQ(m.p_c, 0.0);
  EXPECT_DOUBLE_EQ(m.p_f, 1.0 / 9);
}

TEST(Metrics, LengthMismatch) {
  rhd::OutlierReport r;
  r.sample_size = 5;
  EXPECT_THROW(rhd::detection_metrics(r, std::vector<bool>(4, false)), std::invalid_argument);
  EXPECT_THROW(rhd::detection_metrics(std::vector<int>{6}, std::vector<bool>(4, false)), std::invalid_argument);
}

TEST(Metrics, AverageOverReplicates) {
  rhd::MetricsAverage avg;
  rhd::DetectionMetrics a, b;
  a.p_c = 1.0;
  a.p_f = 0.1;
  b.p_c = 0.0;
  b.p_f = 0.3;
  avg.add(a);
  avg.add(b);
  EXPECT_DOUBLE_EQ(avg.p_c, 0.5);
  EXPECT_DOUBLE_EQ(avg.p_f, 0.2);
  EXPECT_EQ(avg.replicates, 2);
}

TEST(ExactDepth2d, Diamond) {
  const std::vector<P> pts{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(pts, {0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(pts, {1, 0}), 0.25);
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(pts, {3, 3}), 0.0);
}

TEST(ExactDepth2d, CoincidentAndCollinearPoints) {
  const std::vector<P> same{{1, 1}, {1, 1}, {1, 1}};
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(same, {1, 1}), 1.0);
  const std::vector<P> line{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(line, {1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(line, {1.5, 0}), 0.5);
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(line, {0, 0}), 0.25);
  EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(line, {1, 1}), 0.0);
}

// Closed-halfspace count minimized over 3600 grid angles plus the normals
// perpendicular to every data direction, nudged both ways. The nudged
// normals hit every cell of the arrangement, so this is exact up to the
// angular spacing.
double brute_force_depth(const std::vector<P>& pts, P x) {
  std::vector<double> angles;
  for (int k = 0; k < 3600; ++k) angles.push_back(2 * std::numbers::pi * k / 3600);
  for (const auto& p : pts) {
    const double a = std::atan2(p[1] - x[1], p[0] - x[0]);
    for (double base : {a + std::numbers::pi / 2, a - std::numbers::pi / 2})
      for (double eps : {-1e-7, 0.0, 1e-7}) angles.push_back(base + eps);
  }
  int best = static_cast<int>(pts.size());
  for (double th : angles) {
    const double c = std::cos(th), s = std::sin(th);
    int cnt = 0;
    for (const auto& p : pts) cnt += (p[0] - x[0]) * c + (p[1] - x[1]) * s >= 0;
    best = std::min(best, cnt);
  }
  return static_cast<double>(best) / pts.size();
}

TEST(ExactDepth2d, MatchesBruteForceOnRandomClouds) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<P> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({z(rng), 0.5 * z(rng)});
    for (int q = 0; q < 15; ++q) {
      const P x = q < 5 ? pts[q] : P{0.7 * z(rng), 0.4 * z(rng)};
      EXPECT_DOUBLE_EQ(rhd::tukey_depth_2d_exact(pts, x), brute_force_depth(pts, x)) << rep << "/" << q;
    }
  }
}

TEST(ExactDepth2d, ApproximationIsAnUpperBound) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> gaps;
  for (int M : {100, 1000, 10000}) {
    double gap = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      rhd::RowMatrix scores(100, 2);
      std::vector<P> pts;
      for (int i = 0; i < 100; ++i) {
        scores(i, 0) = 1.3 * z(rng);
        scores(i, 1) = 0.6 * z(rng);
        pts.push_back({scores(i, 0), scores(i, 1)});
      }
      const auto dirs = rhd::draw_directions(std::vector<double>{1.69, 0.36}, 2, M, 100 + rep);
      const rhd::ProjectionIndex index(scores, dirs, std::numeric_limits<double>::infinity());
      rhd::RowMatrix q(30, 2);
      for (int k = 0; k < 30; ++k) {
        q(k, 0) = z(rng);
        q(k, 1) = z(rng) * 0.5;
      }
      const auto r = index.depth_of_scores(q);
      for (int k = 0; k < 30; ++k) {
        const double exact = rhd::tukey_depth_2d_exact(pts, {q(k, 0), q(k, 1)});
        EXPECT_GE(r.depths[k], exact);
        gap += r.depths[k] - exact;
      }
    }
    gaps.push_back(gap / 150);
  }
  EXPECT_GE(gaps[0], gaps[1]);
  EXPECT_GE(gaps[1], gaps[2]);
}

TEST(Roc, RowsPerLevelAndMonotoneFalseAlarms) {
  rhd::sim::ScenarioSpec spec;
  spec.n_inliers = 80;
  spec.outliers = {{rhd::sim::OutlierKind::magnitude, 1}};
  rhd::RocParams params;
  params.M = 300;
  params.replicates = 6;
  params.seed = 5;
  const auto rows = rhd::roc_table(spec, params);
  ASSERT_EQ(rows.size(), 20u);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 5; ++b) {
      const auto& row = rows[a * 5 + b];
      EXPECT_EQ(row.u, params.quantile_levels[a]);
      EXPECT_EQ(row.factor, params.factors[b]);
      EXPECT_EQ(row.replicates, 6);
      EXPECT_GE(row.p_c, 0.0);
      EXPECT_LE(row.p_c, 1.0);
      if (b > 0) {
        EXPECT_LE(row.p_f, rows[a * 5 + b - 1].p_f);
        EXPECT_LE(row.p_c, rows[a * 5 + b - 1].p_c);
      }
    }
  }
  const auto again = rhd::roc_table(spec, params);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].p_c, again[k].p_c);
    EXPECT_EQ(rows[k].p_f, again[k].p_f);
  }
}

}  // namespace
