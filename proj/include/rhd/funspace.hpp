#pragma once

// Discretized functional data on a shared grid and its empirical functional
// principal components.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rhd/error.hpp"

namespace rhd {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Ordered time points with trapezoidal quadrature weights. The weights
/// define the L2 inner product of the discretized space.
class Grid {
 public:
  Grid() = default;

  /// Builds trapezoidal weights for arbitrary strictly increasing points.
  explicit Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw std::invalid_argument("grid needs at least 2 points");
    for (std::size_t k = 0; k < points_.size(); ++k) {
      if (!std::isfinite(points_[k])) throw std::invalid_argument("grid point is not finite");
      if (k > 0 && !(points_[k] > points_[k - 1]))
        throw std::invalid_argument("grid points must be strictly increasing");
    }
    weights_.assign(points_.size(), 0.0);
    for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
      const double half = 0.5 * (points_[k + 1] - points_[k]);
      weights_[k] += half;
      weights_[k + 1] += half;
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double span() const { return points_.back() - points_.front(); }

  bool operator==(const Grid& other) const = default;

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// p equispaced points on [0, 1] with trapezoidal weights.
inline Grid make_uniform_grid(int p) {
  if (p < 2) throw std::invalid_argument("make_uniform_grid: p must be >= 2, got " + std::to_string(p));
  std::vector<double> points(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) points[static_cast<std::size_t>(k)] = static_cast<double>(k) / (p - 1);
  points.back() = 1.0;
  return Grid(std::move(points));
}

/// Weighted inner product sum_k w_k f(t_k) g(t_k).
inline double inner_product(std::span<const double> f, std::span<const double> g, const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw std::invalid_argument("inner_product: curve length does not match grid");
  const auto& w = grid.weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += w[k] * f[k] * g[k];
  return acc;
}

/// Curves observed on one grid; row i of `values` is curve i.
class FunctionalSample {
 public:
  FunctionalSample() = default;

  FunctionalSample(Grid grid, RowMatrix values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.cols()) != grid_.size())
      throw std::invalid_argument("sample has " + std::to_string(values_.cols()) + " columns but grid has " +
                                  std::to_string(grid_.size()) + " points");
    if (!values_.allFinite()) throw std::invalid_argument("sample contains non-finite values");
  }

  const Grid& grid() const noexcept { return grid_; }
  const RowMatrix& values() const noexcept { return values_; }
  int size() const noexcept { return static_cast<int>(values_.rows()); }
  int grid_size() const noexcept { return static_cast<int>(values_.cols()); }

  std::span<const double> curve(int i) const {
    return {values_.data() + static_cast<std::ptrdiff_t>(i) * values_.cols(), static_cast<std::size_t>(values_.cols())};
  }

 private:
  Grid grid_;
  RowMatrix values_;
};

/// Truncated empirical FPCA of a sample.
struct EigenSystem {
  Grid grid;
  Vector mean;                    // length p
  std::vector<double> eigenvalues;  // gamma_1 >= ... >= gamma_J > 0
  RowMatrix eigenfunctions;       // J x p, orthonormal under grid weights
  RowMatrix scores;               // n x J, <X_i, phi_j> (uncentered)
  int usable_rank = 0;            // strictly positive eigenvalues of the full spectrum

  int truncation() const noexcept { return static_cast<int>(eigenvalues.size()); }
  int sample_size() const noexcept { return static_cast<int>(scores.rows()); }
};

/// Full spectrum of the weighted empirical covariance (nonincreasing) and the
/// number of eigenvalues treated as strictly positive.
struct Spectrum {
  std::vector<double> eigenvalues;
  int usable_rank = 0;
};

enum class FpcaRoute {
  automatic,   // decompose whichever of the n x n / p x p matrices is smaller
  gram,        // n x n Gram matrix of centered weight-scaled curves
  covariance,  // p x p weighted covariance
};

namespace detail {

// An eigenvalue counts as zero below kRankTolerance * gamma_1, or below
// kRoundoffFloor times the mean squared norm of the raw curves (centering
// round-off leaves eigenvalues of order 1e-32 on constant samples).
inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kRoundoffFloor = 1e-20;

struct Decomposition {
  std::vector<double> eigenvalues;  // descending
  RowMatrix directions;             // k x p, Euclidean-orthonormal in sqrt(w)-scaled space
};

inline RowMatrix centered_scaled(const FunctionalSample& sample, const Vector& mean) {
  const auto& w = sample.grid().weights();
  RowMatrix c(sample.size(), sample.grid_size());
  for (int i = 0; i < sample.size(); ++i)
    for (int k = 0; k < sample.grid_size(); ++k)
      c(i, k) = (sample.values()(i, k) - mean(k)) * std::sqrt(w[static_cast<std::size_t>(k)]);
  return c;
}

inline Decomposition decompose(const RowMatrix& c, FpcaRoute route) {
  const Eigen::Index n = c.rows();
  const Eigen::Index p = c.cols();
  if (route == FpcaRoute::automatic) route = (n <= p) ? FpcaRoute::gram : FpcaRoute::covariance;

  Decomposition out;
  if (route == FpcaRoute::covariance) {
    Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("covariance eigen-decomposition failed");
    out.eigenvalues.resize(static_cast<std::size_t>(p));
    out.directions.resize(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::Index src = p - 1 - j;
      out.eigenvalues[static_cast<std::size_t>(j)] = solver.eigenvalues()(src);
      out.directions.row(j) = solver.eigenvectors().col(src).transpose();
    }
    return out;
  }

  Eigen::MatrixXd gram = (c * c.transpose()) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Gram eigen-decomposition failed");
  out.eigenvalues.resize(static_cast<std::size_t>(n));
  out.directions = RowMatrix::Zero(n, p);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = n - 1 - j;
    const double value = solver.eigenvalues()(src);
    out.eigenvalues[static_cast<std::size_t>(j)] = value;
    if (value > 0) {
      Vector v = c.transpose() * solver.eigenvectors().col(src);
      const double norm = v.norm();
      if (norm > 0) out.directions.row(j) = (v / norm).transpose();
    }
  }
  return out;
}

inline double mean_squared_norm(const FunctionalSample& sample) {
  const auto& w = sample.grid().weights();
  double acc = 0.0;
  for (int i = 0; i < sample.size(); ++i)
    for (int k = 0; k < sample.grid_size(); ++k)
      acc += w[static_cast<std::size_t>(k)] * sample.values()(i, k) * sample.values()(i, k);
  return acc / sample.size();
}

inline int count_usable(const std::vector<double>& eigenvalues, int n, double raw_scale) {
  if (eigenvalues.empty() || !(eigenvalues.front() > 0)) return 0;
  const double cutoff = std::max(eigenvalues.front() * kRankTolerance, raw_scale * kRoundoffFloor);
  int rank = 0;
  for (double g : eigenvalues)
    if (g > cutoff) ++rank;
  return std::min(rank, n - 1);
}

}  // namespace detail

/// Sample mean curve.
inline Vector sample_mean(const FunctionalSample& sample) {
  if (sample.size() < 1) throw std::invalid_argument("empty sample");
  return sample.values().colwise().mean().transpose();
}

/// Eigenvalues of the weighted empirical covariance, largest first.
inline Spectrum covariance_spectrum(const FunctionalSample& sample, FpcaRoute route = FpcaRoute::automatic) {
  if (sample.size() < 2) throw std::invalid_argument("covariance_spectrum: need at least 2 curves");
  const Vector mean = sample_mean(sample);
  auto dec = detail::decompose(detail::centered_scaled(sample, mean), route);
  Spectrum s;
  s.usable_rank = detail::count_usable(dec.eigenvalues, sample.size(), detail::mean_squared_norm(sample));
  s.eigenvalues = std::move(dec.eigenvalues);
  for (std::size_t j = static_cast<std::size_t>(s.usable_rank); j < s.eigenvalues.size(); ++j) s.eigenvalues[j] = 0.0;
  return s;
}

/// Scores <x, phi_j> of arbitrary curves on the system's eigenfunctions.
/// Each row is computed by the same fixed-order loop, so identical input
/// curves always get bit-identical scores.
inline RowMatrix project_scores(const EigenSystem& eig, const RowMatrix& curves) {
  const auto p = static_cast<Eigen::Index>(eig.grid.size());
  if (curves.cols() != p) throw std::invalid_argument("project_scores: curve length does not match grid");
  const auto& w = eig.grid.weights();
  const int J = eig.truncation();
  RowMatrix weighted(J, p);
  for (int j = 0; j < J; ++j)
    for (Eigen::Index k = 0; k < p; ++k) weighted(j, k) = w[static_cast<std::size_t>(k)] * eig.eigenfunctions(j, k);

  RowMatrix out(curves.rows(), J);
  for (Eigen::Index i = 0; i < curves.rows(); ++i) {
    const double* x = curves.data() + i * p;
    for (int j = 0; j < J; ++j) {
      const double* f = weighted.data() + static_cast<Eigen::Index>(j) * p;
      double acc = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) acc += x[k] * f[k];
      out(i, j) = acc;
    }
  }
  return out;
}

inline RowMatrix project_scores(const EigenSystem& eig, const FunctionalSample& points) {
  if (!(points.grid() == eig.grid)) throw std::invalid_argument("evaluation points use a different grid");
  return project_scores(eig, points.values());
}

/// Top-J eigenpairs of the weighted empirical covariance, with scores.
/// Throws rank_error (carrying the usable rank) if fewer than J eigenvalues
/// are strictly positive.
inline EigenSystem fit_fpca(const FunctionalSample& sample, int J, FpcaRoute route = FpcaRoute::automatic) {
  const int n = sample.size();
  if (n < 2) throw std::invalid_argument("fit_fpca: need at least 2 curves");
  if (J < 1) throw std::invalid_argument("fit_fpca: J must be >= 1");
  if (J > std::min(n - 1, sample.grid_size()))
    throw std::invalid_argument("fit_fpca: J=" + std::to_string(J) + " exceeds min(n-1, p)=" +
                                std::to_string(std::min(n - 1, sample.grid_size())));

  EigenSystem eig;
  eig.grid = sample.grid();
  eig.mean = sample_mean(sample);
  auto dec = detail::decompose(detail::centered_scaled(sample, eig.mean), route);
  eig.usable_rank = detail::count_usable(dec.eigenvalues, n, detail::mean_squared_norm(sample));
  if (J > eig.usable_rank)
    throw rank_error("fit_fpca: only " + std::to_string(eig.usable_rank) +
                         " strictly positive eigenvalues; lower J (requested " + std::to_string(J) + ")",
                     eig.usable_rank);

  const auto& w = eig.grid.weights();
  const auto p = static_cast<Eigen::Index>(sample.grid_size());
  eig.eigenvalues.assign(dec.eigenvalues.begin(), dec.eigenvalues.begin() + J);
  eig.eigenfunctions.resize(J, p);
  for (int j = 0; j < J; ++j) {
    for (Eigen::Index k = 0; k < p; ++k)
      eig.eigenfunctions(j, k) = dec.directions(j, k) / std::sqrt(w[static_cast<std::size_t>(k)]);
    Eigen::Index largest = 0;
    for (Eigen::Index k = 1; k < p; ++k)
      if (std::abs(eig.eigenfunctions(j, k)) > std::abs(eig.eigenfunctions(j, largest))) largest = k;
    if (eig.eigenfunctions(j, largest) < 0) eig.eigenfunctions.row(j) *= -1.0;
  }
  eig.scores = project_scores(eig, sample.values());
  return eig;
}

}  // namespace rhd
