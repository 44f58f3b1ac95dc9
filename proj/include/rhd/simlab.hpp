#pragma once

// Synthetic functional data: smooth non-Gaussian inliers from a truncated
// Karhunen-Loeve expansion on the trigonometric basis, and eight outlier
// generators (one magnitude, seven shape).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rhd/funspace.hpp"
#include "rhd/random.hpp"

namespace rhd::sim {

inline constexpr int kDefaultGridSize = 50;
inline constexpr int kDefaultTerms = 15;

/// gamma_j = 2 sum_{l >= j} l^{-5} for j = 1..terms. The tail beyond `terms`
/// is summed explicitly up to l = 20000 and the remainder is taken as the
/// midpoint of its integral bounds [1/(4(L+1)^4), 1/(4L^4)] (width < 1e-21).
/// Smaller indices follow by adding 2 j^{-5}, so consecutive gaps are exactly
/// the summands.
inline std::vector<double> kl_eigenvalues(int terms = kDefaultTerms) {
  if (terms < 1) throw std::invalid_argument("kl_eigenvalues: terms must be >= 1");
  constexpr int L = 20000;
  const double Ld = L;
  double tail = 0.5 * (1.0 / (4.0 * std::pow(Ld + 1.0, 4)) + 1.0 / (4.0 * std::pow(Ld, 4)));
  for (int l = L; l >= terms; --l) tail += std::pow(static_cast<double>(l), -5.0);
  std::vector<double> g(static_cast<std::size_t>(terms));
  g.back() = 2.0 * tail;
  for (int j = terms - 1; j >= 1; --j)
    g[static_cast<std::size_t>(j - 1)] = g[static_cast<std::size_t>(j)] + 2.0 * std::pow(static_cast<double>(j), -5.0);
  return g;
}

/// phi_1 = 1, phi_{2k}(t) = sqrt2 sin(2 pi k t), phi_{2k+1}(t) = sqrt2 cos(2 pi k t).
inline double trig_basis(int j, double t) {
  if (j < 1) throw std::invalid_argument("trig_basis: index starts at 1");
  if (j == 1) return 1.0;
  const int k = j / 2;
  const double arg = 2.0 * std::numbers::pi * k * t;
  return std::numbers::sqrt2 * ((j % 2 == 0) ? std::sin(arg) : std::cos(arg));
}

inline RowMatrix trig_basis_matrix(int terms, const Grid& grid) {
  RowMatrix b(terms, static_cast<Eigen::Index>(grid.size()));
  for (int j = 1; j <= terms; ++j)
    for (std::size_t k = 0; k < grid.size(); ++k) b(j - 1, static_cast<Eigen::Index>(k)) = trig_basis(j, grid.points()[k]);
  return b;
}

enum class InlierLaw {
  uniform_product,  // xi_j = xi * W_j, xi and W_j iid Unif(-sqrt3, sqrt3)
  gaussian,         // xi_j iid N(0, 1)
};

/// Standardized KL coefficients xi_1..xi_terms of one inlier.
inline std::vector<double> draw_standard_coefficients(Rng& rng, InlierLaw law, int terms) {
  std::vector<double> xi(static_cast<std::size_t>(terms));
  if (law == InlierLaw::gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : xi) v = normal(rng);
  } else {
    std::uniform_real_distribution<double> unif(-std::sqrt(3.0), std::sqrt(3.0));
    const double common = unif(rng);
    for (double& v : xi) v = common * unif(rng);
  }
  return xi;
}

/// Upper bound on |X(t)| for uniform-product inliers: 3 sqrt2 sum_j sqrt(gamma_j).
inline double inlier_sup_bound(int terms = kDefaultTerms) {
  double acc = 0.0;
  for (double g : kl_eigenvalues(terms)) acc += std::sqrt(g);
  return 3.0 * std::numbers::sqrt2 * acc;
}

inline FunctionalSample generate_inliers(int n, std::uint64_t seed, InlierLaw law = InlierLaw::uniform_product,
                                         int p = kDefaultGridSize, int terms = kDefaultTerms) {
  if (n < 1) throw std::invalid_argument("generate_inliers: n must be >= 1");
  const Grid grid = make_uniform_grid(p);
  const auto gamma = kl_eigenvalues(terms);
  const RowMatrix basis = trig_basis_matrix(terms, grid);
  Rng rng(seed);
  RowMatrix values = RowMatrix::Zero(n, p);
  for (int i = 0; i < n; ++i) {
    const auto xi = draw_standard_coefficients(rng, law, terms);
    for (int j = 0; j < terms; ++j)
      values.row(i) += std::sqrt(gamma[static_cast<std::size_t>(j)]) * xi[static_cast<std::size_t>(j)] * basis.row(j);
  }
  return FunctionalSample(grid, std::move(values));
}

enum class OutlierKind { magnitude, jump, peak, wiggle, linear, nondifferentiable, phase, damping };

inline constexpr std::array<OutlierKind, 8> kAllOutlierKinds{
    OutlierKind::magnitude, OutlierKind::jump,   OutlierKind::peak,  OutlierKind::wiggle,
    OutlierKind::linear,    OutlierKind::nondifferentiable, OutlierKind::phase, OutlierKind::damping};

inline std::string_view to_string(OutlierKind kind) {
  switch (kind) {
    case OutlierKind::magnitude: return "magnitude";
    case OutlierKind::jump: return "jump";
    case OutlierKind::peak: return "peak";
    case OutlierKind::wiggle: return "wiggle";
    case OutlierKind::linear: return "linear";
    case OutlierKind::nondifferentiable: return "nondifferentiable";
    case OutlierKind::phase: return "phase";
    case OutlierKind::damping: return "damping";
  }
  return "unknown";
}

inline OutlierKind parse_outlier_kind(std::string_view name) {
  for (auto k : kAllOutlierKinds)
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown outlier kind '" + std::string(name) + "'");
}

/// Amplitudes of the outlier generators. Shape outliers are built on a
/// shrunken inlier (base_scale) and rescaled if needed so that |x(t)| never
/// exceeds shape_limit, which sits inside the inlier envelope (about +-4.5
/// for 10^4 inliers).
struct OutlierDesign {
  double magnitude_offset = 2.5;  // added on top of the largest attainable inlier level
  double base_scale = 0.2;
  double shape_limit = 4.2;
  double jump_size = 3.5;
  double peak_height = 4.2;
  double peak_halfwidth = 0.3;
  double wiggle_amplitude = 3.5;
  double wiggle_frequency = 12.0;
  double linear_slope = 2.5;  // times (2t - 1)
  double zigzag_amplitude = 1.5;
  int zigzag_knots = 25;
  double damping_rate = 0.4;
};

inline std::vector<double> generate_outlier(OutlierKind kind, std::uint64_t seed, int p = kDefaultGridSize,
                                            int terms = kDefaultTerms, const OutlierDesign& design = {}) {
  if (terms < 9 && kind == OutlierKind::phase)
    throw std::invalid_argument("phase outlier needs at least 9 KL terms");
  const Grid grid = make_uniform_grid(p);
  const auto& t = grid.points();
  const auto gamma = kl_eigenvalues(terms);
  Rng rng(seed);
  auto xi = draw_standard_coefficients(rng, InlierLaw::uniform_product, terms);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sign = unit(rng) < 0.5 ? 1.0 : -1.0;

  std::vector<double> coef(static_cast<std::size_t>(terms));
  for (int j = 0; j < terms; ++j)
    coef[static_cast<std::size_t>(j)] = std::sqrt(gamma[static_cast<std::size_t>(j)]) * xi[static_cast<std::size_t>(j)];
  auto synthesize = [&](const std::vector<double>& c) {
    std::vector<double> x(static_cast<std::size_t>(p), 0.0);
    for (int j = 0; j < terms; ++j)
      for (int k = 0; k < p; ++k) x[static_cast<std::size_t>(k)] += c[static_cast<std::size_t>(j)] * trig_basis(j + 1, t[static_cast<std::size_t>(k)]);
    return x;
  };
  auto guard = [&](std::vector<double> x) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > design.shape_limit)
      for (double& v : x) v *= design.shape_limit / peak;
    return x;
  };

  std::vector<double> x = synthesize(coef);
  if (kind == OutlierKind::magnitude) {
    // Level of the inlier replaced by the largest attainable one (|xi_1| <= 3) plus an offset.
    const double level = 3.0 * std::sqrt(gamma[0]) + design.magnitude_offset;
    for (double& v : x) v += sign * level - coef[0];
    return x;
  }
  if (kind == OutlierKind::phase) {
    auto c = coef;
    c[7] = coef[1];
    c[8] = coef[2];
    c[1] = c[2] = 0.0;
    return guard(synthesize(c));
  }
  if (kind == OutlierKind::damping) {
    auto c = coef;
    double sq = 0.0, typical = 0.0;
    for (int j = 0; j < terms; ++j) {
      c[static_cast<std::size_t>(j)] *= std::exp(-design.damping_rate * (j + 1));
      sq += c[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(j)];
      typical += gamma[static_cast<std::size_t>(j)];
    }
    const double scale = sq > 0 ? std::sqrt(typical / sq) : 0.0;
    for (double& v : c) v *= scale;
    return guard(synthesize(c));
  }

  for (double& v : x) v *= design.base_scale;
  switch (kind) {
    case OutlierKind::jump: {
      const double t0 = 0.2 + 0.6 * unit(rng);
      for (int k = 0; k < p; ++k) {
        const double step = t[static_cast<std::size_t>(k)] >= t0 ? 1.0 : 0.0;
        x[static_cast<std::size_t>(k)] += sign * design.jump_size * (step - (1.0 - t0));
      }
      break;
    }
    case OutlierKind::peak: {
      const double centre = 0.25 + 0.5 * unit(rng);
      std::vector<double> tent(static_cast<std::size_t>(p));
      for (int k = 0; k < p; ++k)
        tent[static_cast<std::size_t>(k)] =
            std::max(0.0, 1.0 - std::abs(t[static_cast<std::size_t>(k)] - centre) / design.peak_halfwidth);
      const std::vector<double> ones(static_cast<std::size_t>(p), 1.0);
      const double avg = inner_product(tent, ones, grid) / grid.span();
      for (int k = 0; k < p; ++k) x[static_cast<std::size_t>(k)] += design.peak_height * (tent[static_cast<std::size_t>(k)] - avg);
      break;
    }
    case OutlierKind::wiggle: {
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      for (int k = 0; k < p; ++k)
        x[static_cast<std::size_t>(k)] +=
            design.wiggle_amplitude * std::sin(2.0 * std::numbers::pi * design.wiggle_frequency * t[static_cast<std::size_t>(k)] + phase);
      break;
    }
    case OutlierKind::linear:
      for (int k = 0; k < p; ++k) x[static_cast<std::size_t>(k)] += sign * design.linear_slope * (2.0 * t[static_cast<std::size_t>(k)] - 1.0);
      break;
    case OutlierKind::nondifferentiable: {
      const int knots = design.zigzag_knots;
      std::vector<double> knot_value(static_cast<std::size_t>(knots));
      for (int q = 0; q < knots; ++q) knot_value[static_cast<std::size_t>(q)] = (q % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.5 * unit(rng));
      for (int k = 0; k < p; ++k) {
        const double pos = t[static_cast<std::size_t>(k)] * (knots - 1);
        const int q = std::min(knots - 2, static_cast<int>(std::floor(pos)));
        const double frac = pos - q;
        const double z = (1.0 - frac) * knot_value[static_cast<std::size_t>(q)] + frac * knot_value[static_cast<std::size_t>(q + 1)];
        x[static_cast<std::size_t>(k)] += sign * design.zigzag_amplitude * z;
      }
      break;
    }
    default: break;
  }
  return guard(std::move(x));
}

/// Contaminated-sample design.
struct ScenarioSpec {
  int n_inliers = 400;
  std::vector<std::pair<OutlierKind, int>> outliers;  // kind, count
  std::uint64_t seed = 1;
  int p = kDefaultGridSize;
  int terms = kDefaultTerms;
  InlierLaw law = InlierLaw::uniform_product;

  int total() const {
    int n = n_inliers;
    for (const auto& [k, c] : outliers) n += c;
    return n;
  }
  void validate() const {
    if (n_inliers < 0) throw std::invalid_argument("n_inliers must be >= 0");
    for (const auto& [k, c] : outliers)
      if (c < 0) throw std::invalid_argument("outlier count must be >= 0");
    if (total() < 4) throw std::invalid_argument("scenario needs at least 4 curves in total");
    if (p < 2) throw std::invalid_argument("p must be >= 2");
  }
};

inline constexpr std::string_view kInlierLabel = "inlier";

struct Scenario {
  FunctionalSample sample;
  std::vector<std::string> labels;  // "inlier" or outlier kind name

  std::vector<bool> outlier_mask() const {
    std::vector<bool> m(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] != kInlierLabel;
    return m;
  }
};

/// Inliers use derive_seed(seed, 0); the c-th outlier of the list uses
/// derive_seed(seed, 1, c); the final shuffle uses derive_seed(seed, 2).
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto inliers = generate_inliers(std::max(spec.n_inliers, 1), derive_seed(spec.seed, 0), spec.law, spec.p, spec.terms);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int i = 0; i < spec.n_inliers; ++i) {
    const auto c = inliers.curve(i);
    rows.emplace_back(c.begin(), c.end());
    labels.emplace_back(kInlierLabel);
  }
  std::uint64_t c = 0;
  for (const auto& [kind, count] : spec.outliers)
    for (int r = 0; r < count; ++r, ++c) {
      rows.push_back(generate_outlier(kind, derive_seed(spec.seed, 1, c), spec.p, spec.terms));
      labels.emplace_back(to_string(kind));
    }

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(spec.seed, 2));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }

  RowMatrix values(static_cast<Eigen::Index>(rows.size()), spec.p);
  Scenario out;
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int k = 0; k < spec.p; ++k) values(static_cast<Eigen::Index>(i), k) = rows[order[i]][static_cast<std::size_t>(k)];
    out.labels[i] = labels[order[i]];
  }
  out.sample = FunctionalSample(make_uniform_grid(spec.p), std::move(values));
  return out;
}

/// Plain-text scenario config, one `key = value` per line, `#` comments:
///   n_inliers = 400
///   outliers  = magnitude:1, jump:1      (kind:count, comma separated)
///   seed      = 1
///   p         = 50
///   terms     = 15
///   law       = uniform_product | gaussian
inline ScenarioSpec parse_scenario(std::string_view text) {
  ScenarioSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "n_inliers") spec.n_inliers = std::stoi(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "p") spec.p = std::stoi(value);
      else if (key == "terms") spec.terms = std::stoi(value);
      else if (key == "law") {
        if (value == "uniform_product") spec.law = InlierLaw::uniform_product;
        else if (value == "gaussian") spec.law = InlierLaw::gaussian;
        else throw std::invalid_argument("unknown law '" + value + "'");
      } else if (key == "outliers") {
        spec.outliers.clear();
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) {
          item = trim(item);
          if (item.empty()) continue;
          const auto colon = item.find(':');
          const auto kind = parse_outlier_kind(trim(item.substr(0, colon)));
          const int count = colon == std::string::npos ? 1 : std::stoi(trim(item.substr(colon + 1)));
          spec.outliers.emplace_back(kind, count);
        }
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": value out of range");
    }
  }
  spec.validate();
  return spec;
}

inline std::string format_scenario(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "n_inliers = " << spec.n_inliers << "\n";
  out << "outliers = ";
  for (std::size_t i = 0; i < spec.outliers.size(); ++i)
    out << (i ? ", " : "") << to_string(spec.outliers[i].first) << ":" << spec.outliers[i].second;
  out << "\nseed = " << spec.seed << "\np = " << spec.p << "\nterms = " << spec.terms << "\nlaw = "
      << (spec.law == InlierLaw::gaussian ? "gaussian" : "uniform_product") << "\n";
  return out.str();
}

}  // namespace rhd::sim
