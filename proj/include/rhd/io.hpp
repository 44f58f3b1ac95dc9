#pragma once

// CSV and JSON formats.
//
// Sample CSV: first row holds the grid points, each further row one curve.
// Labels CSV: header `curve_id,label`, one row per curve.
// Depth CSV:  header `eval_id,depth,normalized_rank,lambda_used,n_min_directions`.
// Numbers are written in shortest round-trip form.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "rhd/depth.hpp"
#include "rhd/evalkit.hpp"
#include "rhd/funspace.hpp"
#include "rhd/outlier.hpp"

namespace rhd::io {

using nlohmann::json;

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a temporary sibling and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

namespace detail {
inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.emplace_back(b == std::string_view::npos ? std::string_view{} : field.substr(b, e - b + 1));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("line " + std::to_string(line) + ": '" + s + "' is not a number");
  return v;
}

inline std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    start = end + 1;
  }
  return out;
}
}  // namespace detail

inline FunctionalSample parse_sample_csv(std::string_view text) {
  std::vector<double> grid;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  for (const auto& line : detail::lines_of(text)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> values;
    for (const auto& f : detail::split_fields(line)) values.push_back(detail::parse_double(f, lineno));
    if (grid.empty()) {
      grid = std::move(values);
      continue;
    }
    if (values.size() != grid.size())
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " + std::to_string(grid.size()) +
                                  " values, got " + std::to_string(values.size()));
    rows.push_back(std::move(values));
  }
  if (grid.empty()) throw std::invalid_argument("sample CSV is empty");
  RowMatrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < grid.size(); ++k) values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return FunctionalSample(Grid(std::move(grid)), std::move(values));
}

inline FunctionalSample read_sample_csv(const std::filesystem::path& path) {
  try {
    return parse_sample_csv(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

inline std::string format_sample_csv(const FunctionalSample& sample) {
  std::string out;
  auto row = [&out](auto&& values, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      if (k) out += ',';
      out += format_number(values(k));
    }
    out += '\n';
  };
  const auto& pts = sample.grid().points();
  row([&](std::size_t k) { return pts[k]; }, pts.size());
  for (int i = 0; i < sample.size(); ++i) {
    const auto c = sample.curve(i);
    row([&](std::size_t k) { return c[k]; }, c.size());
  }
  return out;
}

inline std::string format_labels_csv(const std::vector<std::string>& labels) {
  std::string out = "curve_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(i) + "," + labels[i] + "\n";
  return out;
}

inline std::vector<std::string> parse_labels_csv(std::string_view text) {
  std::vector<std::string> labels;
  int lineno = 0;
  bool header = true;
  for (const auto& line : detail::lines_of(text)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = detail::split_fields(line);
    if (header) {
      header = false;
      if (fields.size() != 2 || fields[0] != "curve_id" || fields[1] != "label")
        throw std::invalid_argument("labels CSV must start with 'curve_id,label'");
      continue;
    }
    if (fields.size() != 2) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 2 fields");
    if (fields[0] != std::to_string(labels.size()))
      throw std::invalid_argument("line " + std::to_string(lineno) + ": curve ids must be 0, 1, 2, ...");
    labels.push_back(fields[1]);
  }
  return labels;
}

inline std::string format_depth_csv(const DepthResult& depth) {
  const auto ranks = normalized_ranks(depth.depths);
  std::string out = "eval_id,depth,normalized_rank,lambda_used,n_min_directions\n";
  for (std::size_t k = 0; k < depth.depths.size(); ++k) {
    out += std::to_string(k) + "," + format_number(depth.depths[k]) + "," + format_number(ranks.normalized[k]) + "," +
           format_number(depth.lambda_used) + "," + std::to_string(depth.minimizing_directions[k].size()) + "\n";
  }
  return out;
}

inline std::string format_rank_csv(const RankTable& table) {
  std::string out = "curve_id,depth,rank,normalized_rank\n";
  for (std::size_t i = 0; i < table.depths.size(); ++i)
    out += std::to_string(i) + "," + format_number(table.depths[i]) + "," + std::to_string(table.ranks[i]) + "," +
           format_number(table.normalized[i]) + "\n";
  return out;
}

inline std::string format_roc_csv(const std::vector<RocRow>& rows) {
  std::string out = "u,f,p_c,p_f,replicates\n";
  for (const auto& r : rows)
    out += format_number(r.u) + "," + format_number(r.factor) + "," + format_number(r.p_c) + "," + format_number(r.p_f) +
           "," + std::to_string(r.replicates) + "\n";
  return out;
}

namespace detail {
inline json matrix_json(const RowMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}
}  // namespace detail

inline json to_json(const EigenSystem& eig) {
  json j;
  j["grid"] = eig.grid.points();
  j["mean"] = std::vector<double>(eig.mean.data(), eig.mean.data() + eig.mean.size());
  j["eigenvalues"] = eig.eigenvalues;
  j["eigenfunctions"] = detail::matrix_json(eig.eigenfunctions);
  j["scores"] = detail::matrix_json(eig.scores);
  j["usable_rank"] = eig.usable_rank;
  return j;
}

inline json to_json(const OutlierReport& r) {
  json fences = json::array();
  for (const auto& f : r.fences)
    fences.push_back({{"candidate", f.candidate},
                      {"direction", f.direction},
                      {"q1", f.q1},
                      {"q3", f.q3},
                      {"iqr", f.iqr},
                      {"lower", f.lower},
                      {"upper", f.upper}});
  return {{"candidate_set", r.candidate_set}, {"flagged", r.flagged},      {"fences", fences},
          {"factor", r.factor},               {"lambda_used", r.lambda_used}, {"min_depth", r.min_depth},
          {"sample_size", r.sample_size},     {"accepted_count", r.accepted_count}};
}

inline json to_json(const CalibrationResult& c) {
  return {{"factor", c.factor}, {"achieved_rate", c.achieved_rate}, {"grid_tried", c.grid_tried},
          {"rates", c.rates},   {"B", c.B},                         {"target", c.target},
          {"seed", c.seed}};
}

}  // namespace rhd::io
