#pragma once

// Approximate sample regularized halfspace depth over a finite direction pool.
//
// For an evaluation point x with scores x^, the depth is
//   min over accepted m of  n^{-1} #{ i : X^_i . a_m >= x^ . a_m }
// where a direction is accepted when its RKHS norm is <= lambda. The sample
// scores are projected once onto every accepted direction and each column is
// sorted, so a halfspace count is a binary search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rhd/directions.hpp"
#include "rhd/error.hpp"
#include "rhd/funspace.hpp"
#include "rhd/parallel.hpp"

namespace rhd {

struct DepthResult {
  std::vector<double> depths;                           // count / n
  std::vector<int> counts;                              // minimal closed-halfspace counts
  std::vector<std::vector<int>> minimizing_directions;  // pool indices attaining the minimum
  double lambda_used = 0.0;
  int accepted_count = 0;
  int sample_size = 0;
};

namespace detail {
inline double dot(const double* a, const double* b, int J) noexcept {
  double acc = 0.0;
  for (int j = 0; j < J; ++j) acc += a[j] * b[j];
  return acc;
}
}  // namespace detail

/// Sample scores projected onto the accepted directions, kept both in sample
/// order and sorted per direction.
class ProjectionIndex {
 public:
  ProjectionIndex(const RowMatrix& sample_scores, const DirectionSet& dirs, double lambda)
      : lambda_(lambda), J_(dirs.J), n_(static_cast<int>(sample_scores.rows())) {
    if (sample_scores.cols() < dirs.J)
      throw std::invalid_argument("sample scores have fewer columns than the direction dimension");
    if (n_ < 1) throw std::invalid_argument("empty sample");
    if (std::isnan(lambda)) throw std::invalid_argument("lambda is NaN");
    accepted_ = accepted_directions(dirs, lambda);
    if (accepted_.empty())
      throw empty_pool_error("no pool direction has RKHS norm <= lambda=" + std::to_string(lambda));

    directions_.resize(static_cast<Eigen::Index>(accepted_.size()), J_);
    for (std::size_t a = 0; a < accepted_.size(); ++a)
      directions_.row(static_cast<Eigen::Index>(a)) = dirs.coefficients.row(accepted_[a]);

    scores_.resize(n_, J_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < J_; ++j) scores_(i, j) = sample_scores(i, j);

    const std::size_t A = accepted_.size();
    const auto n = static_cast<std::size_t>(n_);
    projections_.resize(A * n);
    sorted_.resize(A * n);
    parallel_for(A, [&](std::size_t a) {
      const double* dir = directions_.data() + static_cast<std::ptrdiff_t>(a) * J_;
      double* col = projections_.data() + a * n;
      for (int i = 0; i < n_; ++i) col[i] = detail::dot(scores_.data() + static_cast<std::ptrdiff_t>(i) * J_, dir, J_);
      std::copy(col, col + n, sorted_.data() + a * n);
      std::sort(sorted_.data() + a * n, sorted_.data() + (a + 1) * n);
    });
  }

  int sample_size() const noexcept { return n_; }
  int dimension() const noexcept { return J_; }
  double lambda() const noexcept { return lambda_; }
  int accepted_count() const noexcept { return static_cast<int>(accepted_.size()); }
  /// Pool index of the a-th accepted direction.
  int pool_index(int a) const { return accepted_[static_cast<std::size_t>(a)]; }
  const std::vector<int>& accepted() const noexcept { return accepted_; }

  const double* direction(int a) const { return directions_.data() + static_cast<std::ptrdiff_t>(a) * J_; }

  /// Projections of all sample points onto accepted direction a, sample order.
  std::span<const double> projections(int a) const {
    return {projections_.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  std::span<const double> sorted(int a) const {
    return {sorted_.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }

  /// #{ i : X^_i . a >= value }.
  int count_at_least(int a, double value) const {
    const auto s = sorted(a);
    return static_cast<int>(s.end() - std::lower_bound(s.begin(), s.end(), value));
  }

  /// Depth of points given by their scores (rows of `points`, >= J columns).
  DepthResult depth_of_scores(const RowMatrix& points) const {
    if (points.cols() < J_) throw std::invalid_argument("evaluation scores have too few columns");
    const auto q = static_cast<std::size_t>(points.rows());
    DepthResult out = empty_result(q);
    parallel_for(q, [&](std::size_t k) {
      std::vector<double> xk(static_cast<std::size_t>(J_));
      for (int j = 0; j < J_; ++j) xk[static_cast<std::size_t>(j)] = points(static_cast<Eigen::Index>(k), j);
      int best = std::numeric_limits<int>::max();
      std::vector<int> argmins;
      for (int a = 0; a < accepted_count(); ++a) {
        const int c = count_at_least(a, detail::dot(xk.data(), direction(a), J_));
        if (c < best) {
          best = c;
          argmins.clear();
        }
        if (c == best) argmins.push_back(accepted_[static_cast<std::size_t>(a)]);
      }
      out.counts[k] = best;
      out.depths[k] = static_cast<double>(best) / n_;
      out.minimizing_directions[k] = std::move(argmins);
    });
    return out;
  }

  /// Depth of the sample points themselves. Equivalent to depth_of_scores on
  /// the sample scores, but uses the sorted order directly.
  DepthResult depth_of_sample() const {
    const auto n = static_cast<std::size_t>(n_);
    const std::size_t A = accepted_.size();
    // counts[a * n + i]
    std::vector<int> counts(A * n);
    parallel_for(A, [&](std::size_t a) {
      const double* col = projections_.data() + a * n;
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [col](int l, int r) { return col[l] < col[r]; });
      int* dst = counts.data() + a * n;
      std::size_t start = 0;
      while (start < n) {
        std::size_t end = start + 1;
        while (end < n && col[order[end]] == col[order[start]]) ++end;
        for (std::size_t k = start; k < end; ++k) dst[order[k]] = static_cast<int>(n - start);
        start = end;
      }
    });

    DepthResult out = empty_result(n);
    parallel_for(n, [&](std::size_t i) {
      int best = std::numeric_limits<int>::max();
      for (std::size_t a = 0; a < A; ++a) best = std::min(best, counts[a * n + i]);
      std::vector<int> argmins;
      for (std::size_t a = 0; a < A; ++a)
        if (counts[a * n + i] == best) argmins.push_back(accepted_[a]);
      out.counts[i] = best;
      out.depths[i] = static_cast<double>(best) / n_;
      out.minimizing_directions[i] = std::move(argmins);
    });
    return out;
  }

 private:
  DepthResult empty_result(std::size_t q) const {
    DepthResult out;
    out.depths.resize(q);
    out.counts.resize(q);
    out.minimizing_directions.resize(q);
    out.lambda_used = lambda_;
    out.accepted_count = accepted_count();
    out.sample_size = n_;
    return out;
  }

  double lambda_;
  int J_;
  int n_;
  std::vector<int> accepted_;
  RowMatrix directions_;
  RowMatrix scores_;
  std::vector<double> projections_;
  std::vector<double> sorted_;
};

namespace detail {
inline void check_dimensions(const EigenSystem& eig, const DirectionSet& dirs) {
  if (dirs.J > eig.truncation())
    throw rank_error("direction set uses J=" + std::to_string(dirs.J) + " but eigensystem has only " +
                         std::to_string(eig.truncation()) + " components",
                     eig.truncation());
}
}  // namespace detail

/// Approximate sample RHD of each evaluation curve w.r.t. the sample behind
/// `eig`. Evaluation curves are projected on the sample eigenfunctions.
inline DepthResult approximate_rhd(const EigenSystem& eig, const DirectionSet& dirs, double lambda,
                                   const FunctionalSample& eval_points) {
  detail::check_dimensions(eig, dirs);
  const ProjectionIndex index(eig.scores, dirs, lambda);
  return index.depth_of_scores(project_scores(eig, eval_points));
}

/// Approximate sample RHD of the sample curves themselves.
inline DepthResult sample_rhd(const EigenSystem& eig, const DirectionSet& dirs, double lambda) {
  detail::check_dimensions(eig, dirs);
  const ProjectionIndex index(eig.scores, dirs, lambda);
  return index.depth_of_sample();
}

/// Halfspace depth over the whole pool (lambda = infinity).
inline DepthResult naive_tukey_depth(const EigenSystem& eig, const DirectionSet& dirs,
                                     const FunctionalSample& eval_points) {
  return approximate_rhd(eig, dirs, std::numeric_limits<double>::infinity(), eval_points);
}

inline DepthResult naive_sample_tukey_depth(const EigenSystem& eig, const DirectionSet& dirs) {
  return sample_rhd(eig, dirs, std::numeric_limits<double>::infinity());
}

}  // namespace rhd
