// Command-line front end: fpca, depth, outliers, calibrate, simulate, rank,
// bench and replay. Every run writes its outputs atomically together with a
// JSON manifest from which `rhd replay` reproduces the outputs.
//
// Exit codes: 0 success, 1 invalid input or arguments, 2 rank deficiency or
// an empty direction pool.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rhd/rhd.hpp"

namespace {

using nlohmann::json;

class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

std::uint64_t parse_env_seed(const std::string& text) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw usage_error("RHD_SEED: '" + text + "' is not an unsigned integer");
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw usage_error(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw usage_error(flag + ": empty list");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + rhd::io::format_number(v[i]);
  return s;
}

// Options shared by the depth-based subcommands.
struct DepthOptions {
  std::string input;
  int J = 6;
  int M = 1000;
  std::optional<double> u;
  std::optional<double> lambda;

  void add(CLI::App* cmd) {
    cmd->add_option("--input", input, "Sample CSV (first row: grid)")->required();
    cmd->add_option("--J", J, "Truncation level")->capture_default_str();
    cmd->add_option("--M", M, "Number of random directions")->capture_default_str();
    cmd->add_option("--u", u, "Quantile level of the RKHS norms setting lambda");
    cmd->add_option("--lambda", lambda, "Explicit regularization parameter (inf = none)");
  }

  void validate() const {
    if (J < 1) throw usage_error("--J must be >= 1");
    if (M < 1) throw usage_error("--M must be >= 1");
    if (u && lambda) throw usage_error("--u and --lambda are mutually exclusive");
    if (!u && !lambda) throw usage_error("one of --u or --lambda is required");
    if (u && !(*u > 0 && *u < 1)) throw usage_error("--u must lie in (0, 1)");
    if (lambda && !(*lambda > 0)) throw usage_error("--lambda must be positive");
  }

  rhd::RegularizationSpec spec() const {
    return u ? rhd::RegularizationSpec::quantile(*u) : rhd::RegularizationSpec::lambda(*lambda);
  }

  void record(json& params) const {
    params["input"] = input;
    params["J"] = J;
    params["M"] = M;
    if (u) params["u"] = *u;
    if (lambda) params["lambda"] = rhd::io::format_number(*lambda);
  }
};

struct Run {
  json params = json::object();
  std::vector<std::string> outputs;

  void write(const std::string& path, const std::string& content) {
    rhd::io::write_file_atomic(path, content);
    outputs.push_back(path);
  }
};

int run(const std::vector<std::string>& args);

int dispatch(const std::vector<std::string>& args) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Regularized halfspace depth for functional data", "rhd"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(rhd::kVersion));

  std::optional<std::uint64_t> seed_flag;
  std::optional<int> threads_flag;
  std::string manifest_path;
  app.add_option("--seed", seed_flag, "Master seed (env RHD_SEED)");
  app.add_option("--threads", threads_flag, "Worker threads, 0 = all cores (env RHD_THREADS)");
  app.add_option("--manifest", manifest_path, "Manifest path (default: <primary output>.manifest.json)");

  // fpca
  auto* fpca = app.add_subcommand("fpca", "Truncated functional PCA of a sample");
  std::string fpca_input, fpca_out;
  int fpca_J = 6;
  fpca->add_option("--input", fpca_input, "Sample CSV")->required();
  fpca->add_option("--J", fpca_J, "Truncation level")->capture_default_str();
  fpca->add_option("--out", fpca_out, "Output JSON")->required();

  // depth
  auto* depth = app.add_subcommand("depth", "Regularized halfspace depth of curves");
  DepthOptions depth_opt;
  std::string depth_eval, depth_out;
  depth_opt.add(depth);
  depth->add_option("--eval", depth_eval, "Curves to evaluate (default: the sample itself)");
  depth->add_option("--out", depth_out, "Output depths CSV")->required();

  // rank
  auto* rank = app.add_subcommand("rank", "Normalized depth ranks of the sample curves");
  DepthOptions rank_opt;
  std::string rank_out;
  rank_opt.add(rank);
  rank->add_option("--out", rank_out, "Output ranks CSV")->required();

  // outliers
  auto* outliers = app.add_subcommand("outliers", "Depth-based outlier detection");
  DepthOptions out_opt;
  std::optional<double> out_factor;
  bool out_calibrate = false;
  int out_B = 50;
  std::string out_grid = join({rhd::kDefaultFactorGrid.begin(), rhd::kDefaultFactorGrid.end()});
  std::string out_out;
  out_opt.add(outliers);
  outliers->add_option("--factor,--f", out_factor, "IQR adjustment factor");
  outliers->add_flag("--calibrate", out_calibrate, "Choose the factor from Gaussian null simulations");
  outliers->add_option("--B", out_B, "Null datasets for --calibrate")->capture_default_str();
  outliers->add_option("--grid", out_grid, "Factor grid for --calibrate")->capture_default_str();
  outliers->add_option("--out", out_out, "Output report JSON")->required();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Choose the adjustment factor from null simulations");
  DepthOptions cal_opt;
  int cal_B = 50;
  std::string cal_grid = out_grid, cal_out;
  double cal_target = rhd::kTargetOutlierRate;
  cal_opt.add(calibrate);
  calibrate->add_option("--B", cal_B, "Null datasets")->capture_default_str();
  calibrate->add_option("--grid", cal_grid, "Factor grid")->capture_default_str();
  calibrate->add_option("--target", cal_target, "Target null flag rate")->capture_default_str();
  calibrate->add_option("--out", cal_out, "Output JSON")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic contaminated sample");
  std::string sim_scenario, sim_out, sim_labels;
  simulate->add_option("--scenario", sim_scenario, "Scenario config file")->required();
  simulate->add_option("--out", sim_out, "Output sample CSV")->required();
  simulate->add_option("--labels", sim_labels, "Output labels CSV")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Detection ROC table over replicates");
  std::string bench_scenario, bench_out;
  int bench_J = 6, bench_M = 1000, bench_reps = 100;
  std::string bench_levels = "0.5,0.7,0.9,0.95";
  std::string bench_factors = out_grid;
  bench->add_option("--scenario", bench_scenario, "Scenario config file")->required();
  bench->add_option("--J", bench_J, "Truncation level")->capture_default_str();
  bench->add_option("--M", bench_M, "Number of random directions")->capture_default_str();
  bench->add_option("--levels", bench_levels, "Quantile levels u")->capture_default_str();
  bench->add_option("--factors", bench_factors, "Adjustment factors f")->capture_default_str();
  bench->add_option("--replicates", bench_reps, "Monte Carlo replicates")->capture_default_str();
  bench->add_option("--out", bench_out, "Output ROC CSV")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  std::string replay_manifest;
  replay->add_option("manifest", replay_manifest, "Manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (replay->parsed()) {
    const auto manifest = json::parse(rhd::io::read_file(replay_manifest));
    if (!manifest.contains("argv") || !manifest["argv"].is_array())
      throw usage_error("manifest '" + replay_manifest + "' has no argv array");
    // Relative paths in argv refer to the directory of the original run.
    if (manifest.contains("working_directory"))
      std::filesystem::current_path(manifest["working_directory"].get<std::string>());
    return run(manifest["argv"].get<std::vector<std::string>>());
  }

  // Seed: flag, then environment, then (simulate/bench) the scenario file, then 1.
  std::optional<std::uint64_t> seed = seed_flag;
  if (!seed) {
    if (auto s = env("RHD_SEED")) seed = parse_env_seed(*s);
  }
  int threads = 0;
  if (threads_flag) {
    threads = *threads_flag;
  } else if (auto t = env("RHD_THREADS")) {
    try {
      threads = std::stoi(*t);
    } catch (const std::exception&) {
      throw usage_error("RHD_THREADS: '" + *t + "' is not an integer");
    }
  }
  if (threads < 0) throw usage_error("--threads must be >= 0");
  rhd::set_thread_count(threads);

  Run r;
  std::string primary;
  auto resolved_seed = [&](std::uint64_t fallback) { return seed.value_or(fallback); };
  std::uint64_t used_seed = 1;

  if (fpca->parsed()) {
    if (fpca_J < 1) throw usage_error("--J must be >= 1");
    const auto sample = rhd::io::read_sample_csv(fpca_input);
    const auto eig = rhd::fit_fpca(sample, fpca_J);
    used_seed = resolved_seed(1);
    r.params = {{"input", fpca_input}, {"J", fpca_J}};
    primary = fpca_out;
    r.write(fpca_out, rhd::io::to_json(eig).dump(2) + "\n");
  } else if (depth->parsed() || rank->parsed()) {
    const auto& opt = depth->parsed() ? depth_opt : rank_opt;
    opt.validate();
    used_seed = resolved_seed(1);
    const auto sample = rhd::io::read_sample_csv(opt.input);
    const auto eig = rhd::fit_fpca(sample, opt.J);
    const auto dirs = rhd::draw_directions(eig, opt.J, opt.M, used_seed);
    const double lambda = rhd::resolve_lambda(opt.spec(), dirs);
    opt.record(r.params);
    if (depth->parsed()) {
      rhd::DepthResult res;
      if (depth_eval.empty()) {
        res = rhd::sample_rhd(eig, dirs, lambda);
      } else {
        const auto eval = rhd::io::read_sample_csv(depth_eval);
        if (!(eval.grid() == sample.grid())) throw usage_error("--eval: grid differs from the sample grid");
        res = rhd::approximate_rhd(eig, dirs, lambda, eval);
        r.params["eval"] = depth_eval;
      }
      primary = depth_out;
      r.write(depth_out, rhd::io::format_depth_csv(res));
    } else {
      const auto res = rhd::sample_rhd(eig, dirs, lambda);
      primary = rank_out;
      r.write(rank_out, rhd::io::format_rank_csv(rhd::normalized_ranks(res.depths)));
    }
  } else if (outliers->parsed()) {
    out_opt.validate();
    if (out_factor.has_value() == out_calibrate) throw usage_error("exactly one of --factor or --calibrate is required");
    if (out_factor && !(*out_factor > 0)) throw usage_error("--factor must be positive");
    used_seed = resolved_seed(1);
    const auto sample = rhd::io::read_sample_csv(out_opt.input);
    out_opt.record(r.params);
    json report_extra;
    double factor = out_factor.value_or(0.0);
    if (out_calibrate) {
      if (out_B < 1) throw usage_error("--B must be >= 1");
      const auto grid = parse_list(out_grid, "--grid");
      const auto cal = rhd::calibrate_factor(sample, out_opt.J, out_opt.M, out_opt.spec(), out_B,
                                             rhd::derive_seed(used_seed, 1), grid);
      factor = cal.factor;
      report_extra = rhd::io::to_json(cal);
      r.params["B"] = out_B;
      r.params["grid"] = out_grid;
      r.params["calibrate"] = true;
    } else {
      r.params["f"] = factor;
    }
    const auto eig = rhd::fit_fpca(sample, out_opt.J);
    const auto dirs = rhd::draw_directions(eig, out_opt.J, out_opt.M, used_seed);
    const auto report = rhd::detect_outliers(eig, dirs, rhd::resolve_lambda(out_opt.spec(), dirs), factor);
    json doc = rhd::io::to_json(report);
    if (out_calibrate) doc["calibration"] = report_extra;
    primary = out_out;
    r.write(out_out, doc.dump(2) + "\n");
  } else if (calibrate->parsed()) {
    cal_opt.validate();
    if (cal_B < 1) throw usage_error("--B must be >= 1");
    if (!(cal_target >= 0 && cal_target <= 1)) throw usage_error("--target must lie in [0, 1]");
    used_seed = resolved_seed(1);
    const auto grid = parse_list(cal_grid, "--grid");
    const auto sample = rhd::io::read_sample_csv(cal_opt.input);
    const auto cal = rhd::calibrate_factor(sample, cal_opt.J, cal_opt.M, cal_opt.spec(), cal_B, used_seed, grid,
                                           cal_target);
    cal_opt.record(r.params);
    r.params["B"] = cal_B;
    r.params["grid"] = cal_grid;
    r.params["target"] = cal_target;
    primary = cal_out;
    r.write(cal_out, rhd::io::to_json(cal).dump(2) + "\n");
  } else if (simulate->parsed()) {
    auto spec = rhd::sim::parse_scenario(rhd::io::read_file(sim_scenario));
    used_seed = resolved_seed(spec.seed);
    spec.seed = used_seed;
    const auto sc = rhd::sim::generate_scenario(spec);
    r.params = {{"scenario", sim_scenario}, {"resolved_scenario", rhd::sim::format_scenario(spec)}};
    primary = sim_out;
    r.write(sim_out, rhd::io::format_sample_csv(sc.sample));
    r.write(sim_labels, rhd::io::format_labels_csv(sc.labels));
  } else if (bench->parsed()) {
    auto spec = rhd::sim::parse_scenario(rhd::io::read_file(bench_scenario));
    used_seed = resolved_seed(spec.seed);
    if (bench_J < 1) throw usage_error("--J must be >= 1");
    if (bench_M < 1) throw usage_error("--M must be >= 1");
    if (bench_reps < 1) throw usage_error("--replicates must be >= 1");
    rhd::RocParams params;
    params.J = bench_J;
    params.M = bench_M;
    params.replicates = bench_reps;
    params.seed = used_seed;
    params.quantile_levels = parse_list(bench_levels, "--levels");
    for (double u : params.quantile_levels)
      if (!(u > 0 && u < 1)) throw usage_error("--levels: each u must lie in (0, 1)");
    params.factors = parse_list(bench_factors, "--factors");
    for (double f : params.factors)
      if (!(f > 0)) throw usage_error("--factors: each f must be positive");
    r.params = {{"scenario", bench_scenario}, {"resolved_scenario", rhd::sim::format_scenario(spec)},
                {"J", bench_J},               {"M", bench_M},
                {"levels", bench_levels},     {"factors", bench_factors},
                {"replicates", bench_reps}};
    primary = bench_out;
    r.write(bench_out, rhd::io::format_roc_csv(rhd::roc_table(spec, params)));
  }

  // Replayable argv: the original arguments with the resolved seed made explicit.
  std::vector<std::string> argv_out;
  const bool has_seed = seed_flag.has_value();
  if (!has_seed) {
    argv_out.push_back("--seed");
    argv_out.push_back(std::to_string(used_seed));
  }
  argv_out.insert(argv_out.end(), args.begin(), args.end());

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = {{"tool", "rhd"},
                   {"version", rhd::kVersion},
                   {"subcommand", app.get_subcommands().front()->get_name()},
                   {"argv", argv_out},
                   {"working_directory", std::filesystem::current_path().string()},
                   {"parameters", r.params},
                   {"seed", used_seed},
                   {"threads", rhd::thread_count()},
                   {"outputs", r.outputs},
                   {"wall_time_seconds", wall}};
  const std::string mpath = manifest_path.empty() ? primary + ".manifest.json" : manifest_path;
  rhd::io::write_file_atomic(mpath, manifest.dump(2) + "\n");
  return 0;
}

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const rhd::rank_error& e) {
    std::cerr << "rhd: rank error: " << e.what() << "\n";
    return 2;
  } catch (const rhd::empty_pool_error& e) {
    std::cerr << "rhd: empty direction pool: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "rhd: malformed JSON: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "rhd: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
