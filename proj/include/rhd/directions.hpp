#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rhd/error.hpp"
#include "rhd/funspace.hpp"
#include "rhd/random.hpp"

namespace rhd {

/// Pool of unit coefficient vectors in R^J shared by every regularization
/// level. Row m is a_m = z_m / |z_m| with z_mj ~ N(0, gamma_j).
struct DirectionSet {
  int J = 0;
  RowMatrix coefficients;            // M x J, unit rows
  std::vector<double> rkhs_norms;    // |diag(gamma)^{-1/2} a_m|
  std::uint64_t seed = 0;

  int size() const noexcept { return static_cast<int>(coefficients.rows()); }
};

inline DirectionSet draw_directions(std::span<const double> eigenvalues, int J, int M, std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("draw_directions: M must be >= 1");
  if (J < 1) throw std::invalid_argument("draw_directions: J must be >= 1");
  if (static_cast<std::size_t>(J) > eigenvalues.size())
    throw rank_error("draw_directions: J=" + std::to_string(J) + " exceeds available eigenvalues",
                     static_cast<int>(eigenvalues.size()));
  for (int j = 0; j < J; ++j)
    if (!(eigenvalues[static_cast<std::size_t>(j)] > 0))
      throw rank_error("draw_directions: eigenvalue " + std::to_string(j + 1) + " is not positive", j);

  std::vector<double> sd(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) sd[static_cast<std::size_t>(j)] = std::sqrt(eigenvalues[static_cast<std::size_t>(j)]);

  DirectionSet set;
  set.J = J;
  set.seed = seed;
  set.coefficients.resize(M, J);
  set.rkhs_norms.resize(static_cast<std::size_t>(M));

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(static_cast<std::size_t>(J));
  for (int m = 0; m < M; ++m) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (int j = 0; j < J; ++j) {
        z[static_cast<std::size_t>(j)] = sd[static_cast<std::size_t>(j)] * normal(rng);
        sq += z[static_cast<std::size_t>(j)] * z[static_cast<std::size_t>(j)];
      }
    } while (!(sq > 0));
    const double len = std::sqrt(sq);
    double rkhs = 0.0;
    for (int j = 0; j < J; ++j) {
      const double a = z[static_cast<std::size_t>(j)] / len;
      set.coefficients(m, j) = a;
      rkhs += a * a / eigenvalues[static_cast<std::size_t>(j)];
    }
    set.rkhs_norms[static_cast<std::size_t>(m)] = std::sqrt(rkhs);
  }
  return set;
}

inline DirectionSet draw_directions(const EigenSystem& eig, int J, int M, std::uint64_t seed) {
  return draw_directions(std::span<const double>(eig.eigenvalues), J, M, seed);
}

/// Either an explicit lambda or a quantile level u of the pool's RKHS norms.
struct RegularizationSpec {
  struct Lambda {
    double value;
  };
  struct Quantile {
    double level;
  };
  std::variant<Lambda, Quantile> value = Quantile{0.95};

  static RegularizationSpec lambda(double v) { return {Lambda{v}}; }
  static RegularizationSpec quantile(double u) { return {Quantile{u}}; }
  static RegularizationSpec unregularized() { return {Lambda{std::numeric_limits<double>::infinity()}}; }

  bool is_quantile() const noexcept { return std::holds_alternative<Quantile>(value); }
};

/// Index (1-based) of the order statistic used for quantile level u with M
/// norms: ceil(u M), computed with a 1e-9 slack so that e.g. 0.95 * 1000 maps
/// to 950 despite binary rounding of u.
inline int quantile_order_index(double u, int M) {
  const auto k = static_cast<int>(std::ceil(u * M - 1e-9));
  return std::clamp(k, 1, M);
}

inline double resolve_lambda(const RegularizationSpec& spec, const DirectionSet& dirs) {
  if (const auto* l = std::get_if<RegularizationSpec::Lambda>(&spec.value)) {
    if (!(l->value > 0)) throw std::invalid_argument("lambda must be positive");
    return l->value;
  }
  const double u = std::get<RegularizationSpec::Quantile>(spec.value).level;
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile level u must lie in (0, 1)");
  if (dirs.rkhs_norms.empty()) throw std::invalid_argument("direction set is empty");
  std::vector<double> sorted = dirs.rkhs_norms;
  const int k = quantile_order_index(u, static_cast<int>(sorted.size()));
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  return sorted[static_cast<std::size_t>(k - 1)];
}

/// Pool indices with rkhs_norm <= lambda, ascending.
inline std::vector<int> accepted_directions(const DirectionSet& dirs, double lambda) {
  std::vector<int> out;
  for (int m = 0; m < dirs.size(); ++m)
    if (dirs.rkhs_norms[static_cast<std::size_t>(m)] <= lambda) out.push_back(m);
  return out;
}

}  // namespace rhd
