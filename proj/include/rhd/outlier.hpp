#pragma once

// Depth-based outlier detection: the least deep curves are candidates, and a
// candidate is flagged when a univariate boxplot fence along one of its
// minimizing directions excludes it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rhd/depth.hpp"
#include "rhd/directions.hpp"
#include "rhd/funspace.hpp"
#include "rhd/parallel.hpp"
#include "rhd/random.hpp"

namespace rhd {

inline constexpr std::array<double, 5> kDefaultFactorGrid{1.5, 2.0, 2.5, 3.0, 3.5};
inline constexpr double kTargetOutlierRate = 0.007;

/// Empirical quantile of sorted data by linear interpolation between order
/// statistics: position h = (n - 1) * prob.
inline double sorted_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct Fence {
  int candidate = 0;  // sample index i0
  int direction = 0;  // pool index
  double q1 = 0, q3 = 0, iqr = 0;
  double lower = 0, upper = 0;
};

struct OutlierReport {
  std::vector<int> candidate_set;  // indices attaining the minimal depth
  std::vector<int> flagged;        // subset of candidate_set
  std::vector<Fence> fences;
  double factor = 0.0;
  double lambda_used = 0.0;
  double min_depth = 0.0;
  int sample_size = 0;
  int accepted_count = 0;
};

namespace detail {

inline std::vector<OutlierReport> detect_with_index(const ProjectionIndex& index, const DepthResult& depth,
                                                    std::span<const double> factors) {
  for (double f : factors)
    if (!(f > 0)) throw std::invalid_argument("adjustment factor must be positive");
  const int n = index.sample_size();
  const int min_count = *std::min_element(depth.counts.begin(), depth.counts.end());

  std::vector<int> candidates;
  for (int i = 0; i < n; ++i)
    if (depth.counts[static_cast<std::size_t>(i)] == min_count) candidates.push_back(i);

  std::vector<OutlierReport> reports(factors.size());
  std::vector<std::vector<char>> is_flagged(factors.size(), std::vector<char>(candidates.size(), 0));
  for (std::size_t r = 0; r < factors.size(); ++r) {
    reports[r].candidate_set = candidates;
    reports[r].factor = factors[r];
    reports[r].lambda_used = index.lambda();
    reports[r].min_depth = static_cast<double>(min_count) / n;
    reports[r].sample_size = n;
    reports[r].accepted_count = index.accepted_count();
  }

  const auto& accepted = index.accepted();
  for (int i0 : candidates) {
    for (int pool : depth.minimizing_directions[static_cast<std::size_t>(i0)]) {
      const int a = static_cast<int>(std::lower_bound(accepted.begin(), accepted.end(), pool) - accepted.begin());
      const auto sorted = index.sorted(a);
      const auto proj = index.projections(a);
      const double q1 = sorted_quantile(sorted, 0.25);
      const double q3 = sorted_quantile(sorted, 0.75);
      const double iqr = q3 - q1;
      for (std::size_t r = 0; r < factors.size(); ++r) {
        const double lower = q1 - factors[r] * iqr;
        const double upper = q3 + factors[r] * iqr;
        reports[r].fences.push_back({i0, pool, q1, q3, iqr, lower, upper});
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          const double v = proj[static_cast<std::size_t>(candidates[c])];
          if (v < lower || v > upper) is_flagged[r][c] = 1;
        }
      }
    }
  }
  for (std::size_t r = 0; r < factors.size(); ++r)
    for (std::size_t c = 0; c < candidates.size(); ++c)
      if (is_flagged[r][c]) reports[r].flagged.push_back(candidates[c]);
  return reports;
}

}  // namespace detail

/// One report per factor; the depth computation is shared.
inline std::vector<OutlierReport> detect_outliers(const EigenSystem& eig, const DirectionSet& dirs, double lambda,
                                                  std::span<const double> factors) {
  detail::check_dimensions(eig, dirs);
  if (eig.sample_size() < 4) throw std::invalid_argument("detect_outliers: need at least 4 curves");
  const ProjectionIndex index(eig.scores, dirs, lambda);
  return detail::detect_with_index(index, index.depth_of_sample(), factors);
}

inline OutlierReport detect_outliers(const EigenSystem& eig, const DirectionSet& dirs, double lambda, double factor) {
  const double f[1] = {factor};
  return std::move(detect_outliers(eig, dirs, lambda, std::span<const double>(f, 1)).front());
}

/// Gaussian curves with the mean and J-truncated covariance of `eig`:
/// mean + sum_j sqrt(gamma_j) Z_j phi_j.
inline FunctionalSample simulate_gaussian_null(const EigenSystem& eig, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate_gaussian_null: n must be >= 1");
  const int J = eig.truncation();
  const auto p = static_cast<Eigen::Index>(eig.grid.size());
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix values(n, p);
  for (int i = 0; i < n; ++i) {
    values.row(i) = eig.mean.transpose();
    for (int j = 0; j < J; ++j) {
      const double coef = std::sqrt(eig.eigenvalues[static_cast<std::size_t>(j)]) * normal(rng);
      values.row(i) += coef * eig.eigenfunctions.row(j);
    }
  }
  return FunctionalSample(eig.grid, std::move(values));
}

struct CalibrationResult {
  double factor = 0.0;
  double achieved_rate = 0.0;
  std::vector<double> grid_tried;
  std::vector<double> rates;  // mean flagged proportion per grid factor
  int B = 0;
  double target = kTargetOutlierRate;
  std::uint64_t seed = 0;
};

/// Mean flagged proportion per factor over B Gaussian null datasets built
/// from `eig`. Null dataset b uses seeds derive_seed(seed, b, 0) for curves
/// and derive_seed(seed, b, 1) for directions.
inline std::vector<double> null_flag_rates(const EigenSystem& eig, int n, int M, const RegularizationSpec& spec,
                                           std::span<const double> factors, int B, std::uint64_t seed) {
  if (B < 1) throw std::invalid_argument("B must be >= 1");
  const int J = eig.truncation();
  std::vector<std::vector<double>> per_dataset(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    const auto null = simulate_gaussian_null(eig, n, derive_seed(seed, b, 0));
    const auto null_eig = fit_fpca(null, J);
    const auto dirs = draw_directions(null_eig, J, M, derive_seed(seed, b, 1));
    const auto reports = detect_outliers(null_eig, dirs, resolve_lambda(spec, dirs), factors);
    auto& rates = per_dataset[b];
    for (const auto& r : reports) rates.push_back(static_cast<double>(r.flagged.size()) / n);
  });
  std::vector<double> mean(factors.size(), 0.0);
  for (const auto& rates : per_dataset)
    for (std::size_t r = 0; r < rates.size(); ++r) mean[r] += rates[r];
  for (double& m : mean) m /= B;
  return mean;
}

/// Picks the grid factor whose mean null flag rate is closest to `target`;
/// ties go to the larger factor.
inline CalibrationResult calibrate_factor(const FunctionalSample& sample, int J, int M, const RegularizationSpec& spec,
                                          int B, std::uint64_t seed,
                                          std::span<const double> grid = kDefaultFactorGrid,
                                          double target = kTargetOutlierRate) {
  if (grid.empty()) throw std::invalid_argument("factor grid is empty");
  const auto eig = fit_fpca(sample, J);
  CalibrationResult out;
  out.grid_tried.assign(grid.begin(), grid.end());
  out.B = B;
  out.target = target;
  out.seed = seed;
  out.rates = null_flag_rates(eig, sample.size(), M, spec, grid, B, seed);
  std::size_t best = 0;
  for (std::size_t r = 1; r < grid.size(); ++r) {
    const double gap = std::abs(out.rates[r] - target);
    const double best_gap = std::abs(out.rates[best] - target);
    if (gap < best_gap || (gap == best_gap && grid[r] > grid[best])) best = r;
  }
  out.factor = grid[best];
  out.achieved_rate = out.rates[best];
  return out;
}

}  // namespace rhd
