#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rhd/depth.hpp"
#include "rhd/directions.hpp"
#include "rhd/funspace.hpp"
#include "rhd/outlier.hpp"
#include "rhd/parallel.hpp"
#include "rhd/random.hpp"
#include "rhd/simlab.hpp"

namespace rhd {

struct RankTable {
  std::vector<double> depths;
  std::vector<int> ranks;          // 1 = least deep; ties share the minimum rank
  std::vector<double> normalized;  // rank / n
};

inline RankTable normalized_ranks(std::span<const double> depths) {
  if (depths.empty()) throw std::invalid_argument("normalized_ranks: empty input");
  const std::size_t n = depths.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return depths[a] < depths[b]; });
  RankTable t;
  t.depths.assign(depths.begin(), depths.end());
  t.ranks.resize(n);
  t.normalized.resize(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && depths[order[end]] == depths[order[start]]) ++end;
    for (std::size_t k = start; k < end; ++k) t.ranks[order[k]] = static_cast<int>(start + 1);
    start = end;
  }
  for (std::size_t i = 0; i < n; ++i) t.normalized[i] = static_cast<double>(t.ranks[i]) / static_cast<double>(n);
  return t;
}

struct DetectionMetrics {
  double p_c = 0.0;  // flagged outliers / outliers (0 when there are none)
  double p_f = 0.0;  // flagged inliers / inliers (0 when there are none)
  int true_positives = 0;
  int false_positives = 0;
  int outliers = 0;
  int inliers = 0;
};

inline DetectionMetrics detection_metrics(std::span<const int> flagged, const std::vector<bool>& is_outlier) {
  DetectionMetrics m;
  for (bool o : is_outlier) (o ? m.outliers : m.inliers)++;
  std::vector<char> seen(is_outlier.size(), 0);
  for (int i : flagged) {
    if (i < 0 || static_cast<std::size_t>(i) >= is_outlier.size())
      throw std::invalid_argument("detection_metrics: flagged index out of range of labels");
    if (seen[static_cast<std::size_t>(i)]) continue;
    seen[static_cast<std::size_t>(i)] = 1;
    (is_outlier[static_cast<std::size_t>(i)] ? m.true_positives : m.false_positives)++;
  }
  if (m.outliers > 0) m.p_c = static_cast<double>(m.true_positives) / m.outliers;
  if (m.inliers > 0) m.p_f = static_cast<double>(m.false_positives) / m.inliers;
  return m;
}

inline DetectionMetrics detection_metrics(const OutlierReport& report, const std::vector<bool>& is_outlier) {
  if (static_cast<std::size_t>(report.sample_size) != is_outlier.size())
    throw std::invalid_argument("detection_metrics: label count does not match sample size");
  return detection_metrics(report.flagged, is_outlier);
}

/// Mean p_c / p_f over replicates.
struct MetricsAverage {
  double p_c = 0.0;
  double p_f = 0.0;
  int replicates = 0;

  void add(const DetectionMetrics& m) {
    p_c += (m.p_c - p_c) / (replicates + 1);
    p_f += (m.p_f - p_f) / (replicates + 1);
    ++replicates;
  }
};

/// Exact halfspace depth (closed halfspaces) of x w.r.t. a planar point set.
/// Points coinciding with x are in every halfspace; for the others, the
/// complement of a closed halfplane through x is an open half-circle of
/// directions, so depth = (n - max points in an open half-circle) / n. The
/// maximum is found by an angular sweep over the sorted directions.
inline double tukey_depth_2d_exact(std::span<const std::array<double, 2>> points, std::array<double, 2> x) {
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("tukey_depth_2d_exact: empty point set");
  struct Dir {
    double dx, dy, angle;
  };
  std::vector<Dir> dirs;
  dirs.reserve(n);
  for (const auto& p : points) {
    const double dx = p[0] - x[0], dy = p[1] - x[1];
    if (dx == 0.0 && dy == 0.0) continue;
    dirs.push_back({dx, dy, std::atan2(dy, dx)});
  }
  const std::size_t m = dirs.size();
  if (m == 0) return 1.0;
  std::sort(dirs.begin(), dirs.end(), [](const Dir& a, const Dir& b) { return a.angle < b.angle; });

  // in_half(i, j): direction j lies in the half-open half-circle [angle_i, angle_i + pi).
  auto in_half = [&](std::size_t i, std::size_t j) {
    const Dir& a = dirs[i];
    const Dir& b = dirs[j % m];
    const double cross = a.dx * b.dy - a.dy * b.dx;
    if (cross > 0) return true;
    if (cross < 0) return false;
    return a.dx * b.dx + a.dy * b.dy > 0;
  };

  std::size_t best = 0;
  std::size_t end = 0;  // exclusive, in the doubled index space
  for (std::size_t i = 0; i < m; ++i) {
    end = std::max(end, i + 1);
    while (end < i + m && in_half(i, end)) ++end;
    best = std::max(best, end - i);
  }
  return static_cast<double>(n - best) / static_cast<double>(n);
}

struct RocRow {
  double u = 0.0;
  double factor = 0.0;
  double p_c = 0.0;
  double p_f = 0.0;
  int replicates = 0;
};

struct RocParams {
  int J = 6;
  int M = 1000;
  std::vector<double> quantile_levels{0.5, 0.7, 0.9, 0.95};
  std::vector<double> factors{kDefaultFactorGrid.begin(), kDefaultFactorGrid.end()};
  int replicates = 100;
  std::uint64_t seed = 1;
};

/// p_c / p_f per (u, f) averaged over replicates. Replicate r uses the
/// scenario with seed derive_seed(params.seed, r, 0) and directions seeded by
/// derive_seed(params.seed, r, 1); one direction pool serves every u.
inline std::vector<RocRow> roc_table(const sim::ScenarioSpec& scenario, const RocParams& params) {
  if (params.replicates < 1) throw std::invalid_argument("roc_table: replicates must be >= 1");
  const std::size_t U = params.quantile_levels.size(), F = params.factors.size();
  std::vector<std::vector<DetectionMetrics>> per_rep(static_cast<std::size_t>(params.replicates));
  parallel_for(static_cast<std::size_t>(params.replicates), [&](std::size_t r) {
    auto spec = scenario;
    spec.seed = derive_seed(params.seed, r, 0);
    const auto sc = sim::generate_scenario(spec);
    const auto eig = fit_fpca(sc.sample, params.J);
    const auto dirs = draw_directions(eig, params.J, params.M, derive_seed(params.seed, r, 1));
    const auto mask = sc.outlier_mask();
    auto& out = per_rep[r];
    for (double u : params.quantile_levels) {
      const double lambda = resolve_lambda(RegularizationSpec::quantile(u), dirs);
      for (const auto& report : detect_outliers(eig, dirs, lambda, params.factors))
        out.push_back(detection_metrics(report, mask));
    }
  });

  std::vector<RocRow> rows;
  for (std::size_t a = 0; a < U; ++a)
    for (std::size_t b = 0; b < F; ++b) {
      MetricsAverage avg;
      for (const auto& rep : per_rep) avg.add(rep[a * F + b]);
      rows.push_back({params.quantile_levels[a], params.factors[b], avg.p_c, avg.p_f, avg.replicates});
    }
  return rows;
}

}  // namespace rhd
