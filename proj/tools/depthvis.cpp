// depthvis command line: scene generation, degradation, solving, metrics,
// benchmarks and correlation reports.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "depthvis/harness.hpp"

namespace fs = std::filesystem;
using namespace depthvis;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

// Flags shared by every subcommand.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file");
  cmd->add_option("--seed", f.seed, "random seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--jobs", f.jobs, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Unreadable, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorCode::Unwritable, "cannot write " + path.string());
}

fs::path out_dir(const CommonFlags& f) {
  const fs::path dir = f.out.empty() ? fs::path(".") : fs::path(f.out);
  fs::create_directories(dir);
  return dir;
}

DepthMap load_input(const std::string& path, double pitch) {
  DepthMap map = load_depth(path, depth_format_from_path(path));
  map.pixel_pitch = pitch;
  return map;
}

// --- gen -------------------------------------------------------------------

struct GenArgs {
  std::string kind = "sphere";
  int width = 128;
  int height = 128;
  std::string format = "pfm";
  bool renderings = false;
};

int run_gen(const CommonFlags& f, const GenArgs& a) {
  SceneSpec spec;
  if (!f.config.empty()) {
    spec = parse_scene_spec(read_text(f.config));
  } else {
    spec.kind = scene_kind_from_string(a.kind);
    spec.width = a.width;
    spec.height = a.height;
  }
  const DepthMap gt = generate(spec);
  const fs::path dir = out_dir(f);
  const DepthFormat format = depth_format_from_string(a.format);
  const std::string ext = format == DepthFormat::PFM ? ".pfm" : format == DepthFormat::PGM16 ? ".pgm" : ".csv";
  save_depth(gt, dir / (to_string(spec.kind) + ext), format);
  if (a.renderings) {
    const auto images = basis_renderings(gt, LightRig::canonical());
    for (std::size_t m = 0; m < images.size(); ++m) {
      save_rendering(images[m], dir / (to_string(spec.kind) + "_e" + std::to_string(m + 1) + ".pgm"));
    }
  }
  std::cout << "wrote " << (dir / (to_string(spec.kind) + ext)).string() << "\n";
  return kExitOk;
}

// --- degrade ---------------------------------------------------------------

struct DegradeArgs {
  std::string input;
  double pitch = 0.01;
  int factor = 0;
  std::string model = "box";
  double noise = 0.0;
};

int run_degrade(const CommonFlags& f, const DegradeArgs& a) {
  const DepthMap gt = load_input(a.input, a.pitch);
  const fs::path dir = out_dir(f);
  const std::uint64_t seed = f.seed.value_or(0);
  if (a.factor > 0) {
    const Resampler r{downsample_model_from_string(a.model), a.factor};
    DepthMap low = downsample(r, gt);
    if (a.noise > 0) low = add_multiplicative_noise(low, a.noise, seed);
    save_depth(low, dir / "lowres.pfm", DepthFormat::PFM);
    std::cout << "wrote " << (dir / "lowres.pfm").string() << "\n";
    return kExitOk;
  }
  for (const auto& [label, map] : degradation_pool(gt, seed)) save_depth(map, dir / (label + ".pfm"), DepthFormat::PFM);
  std::cout << "wrote degradation pool to " << dir.string() << "\n";
  return kExitOk;
}

// --- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string input;
  std::string guide;
  double pitch = 0.04;
  int factor = 4;
  std::string model = "box";
  std::string fidelity = "visual";
  std::optional<double> lambda;
  std::optional<double> w;
  std::string init = "bicubic";
  int budget = SolveOptions{}.budget;
  double tol = SolveOptions{}.tol;
};

int run_solve(const CommonFlags& f, const SolveArgs& a) {
  SuperResProblem p;
  p.low_res = load_input(a.input, a.pitch);
  p.resampler = Resampler{downsample_model_from_string(a.model), a.factor};
  p.fidelity = fidelity_from_string(a.fidelity);
  p.smoothness_lambda = a.lambda.value_or(default_smoothness(p.fidelity));
  if (a.w) {
    p.auto_weight = false;
    p.weights.w = *a.w;
  }
  if (!a.guide.empty()) p.guide = load_gray(a.guide);
  SolveOptions o;
  o.init = init_method_from_string(a.init);
  o.budget = a.budget;
  o.tol = a.tol;
  const SolveResult r = solve(p, o);
  const fs::path dir = out_dir(f);
  save_depth(r.depth, dir / "superres.pfm", DepthFormat::PFM);
  r.trace.write_csv(dir / "trace.csv");
  std::cout << "wrote " << (dir / "superres.pfm").string() << " (" << r.trace.records.size() << " iterations)\n";
  return kExitOk;
}

// --- metrics ---------------------------------------------------------------

struct MetricsArgs {
  std::string estimate;
  std::string reference;
  double pitch = 0.01;
  std::vector<std::string> metrics{"rmse_d", "mse_v", "rmse_v", "bumpiness_d", "dssim_v", "rmse_v1"};
};

int run_metrics(const CommonFlags& f, const MetricsArgs& a) {
  for (const auto& id : a.metrics) validate_metric_id(id);
  BenchResult result;
  result.metric_ids = a.metrics;
  BenchRow row;
  row.scene = fs::path(a.reference).stem().string();
  row.method = fs::path(a.estimate).stem().string();
  try {
    row.report = evaluate_metrics(load_input(a.estimate, a.pitch), load_input(a.reference, a.pitch), a.metrics);
  } catch (const Error& e) {
    row.status = to_string(e.code());
    std::cerr << "metrics: " << e.what() << "\n";
  }
  result.rows.push_back(std::move(row));
  const std::string csv = result.to_csv();
  if (f.out.empty()) {
    std::cout << csv;
  } else {
    const fs::path path = out_dir(f) / "metrics.csv";
    write_text(path, csv);
    std::cout << "wrote " << path.string() << "\n";
  }
  return result.all_ok() ? kExitOk : kExitPartial;
}

// --- bench -----------------------------------------------------------------

int run_bench(const CommonFlags& f) {
  if (f.config.empty()) throw Error(ErrorCode::InvalidArgument, "bench needs --config");
  RunConfig config = load_run_config(f.config);
  if (f.seed) config.seed = *f.seed;
  if (f.jobs) config.jobs = *f.jobs;
  if (!f.out.empty()) config.output_dir = f.out;
  if (config.output_dir.empty()) config.output_dir = ".";
  const BenchResult result = run_benchmark(config);
  std::size_t failed = 0;
  for (const auto& row : result.rows) {
    if (!row.ok()) {
      ++failed;
      std::cerr << "row failed: " << row.scene << " / " << row.method << " x" << row.factor << ": " << row.status;
      if (!row.detail.empty()) std::cerr << " (" << row.detail << ")";
      std::cerr << "\n";
    }
  }
  std::cout << "wrote " << (config.output_dir / "results.csv").string() << " (" << result.rows.size() << " rows, "
            << failed << " failed)\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

// --- correlate -------------------------------------------------------------

struct CorrelateArgs {
  std::string input;
  std::string reference = "dssim_v.max";
  std::vector<std::string> candidates{"rmse_d", "rmse_v", "mse_v", "bumpiness_d", "rmse_v1.max"};
  bool plots = false;
};

int run_correlate(const CommonFlags& f, const CorrelateArgs& a) {
  const BenchResult results = read_results_csv(a.input);
  const CorrelationReport report = correlation_report(results.rows, a.reference, a.candidates);
  const fs::path dir = out_dir(f);
  write_text(dir / "correlation.csv", report.to_csv());
  write_text(dir / "scatter.csv", report.scatter_csv());
  if (a.plots && !report.points.empty()) {
    for (std::size_t c = 0; c < a.candidates.size(); ++c) {
      std::vector<double> xs, ys;
      for (const auto& p : report.points) {
        xs.push_back(p[c + 1]);
        ys.push_back(p[0]);
      }
      write_scatter_plot(dir / ("scatter_" + a.candidates[c] + ".pgm"), xs, ys);
    }
  }
  std::cout << report.to_csv();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthvis: visual-difference metrics and super-resolution for depth maps"};
  app.require_subcommand(1);

  CommonFlags common;
  GenArgs gen;
  DegradeArgs degrade;
  SolveArgs solve_args;
  MetricsArgs metrics;
  CorrelateArgs correlate;

  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic ground-truth scene");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--kind", gen.kind, "sphere|cylinder|cube|ramp|sine (ignored with --config)");
  gen_cmd->add_option("--width", gen.width, "width in pixels");
  gen_cmd->add_option("--height", gen.height, "height in pixels");
  gen_cmd->add_option("--format", gen.format, "pfm|pgm16|csv");
  gen_cmd->add_flag("--renderings", gen.renderings, "also write the three basis renderings");

  auto* degrade_cmd = app.add_subcommand("degrade", "write the degradation pool or a low-resolution input");
  add_common(degrade_cmd, common);
  degrade_cmd->add_option("--input", degrade.input, "ground-truth depth map")->required();
  degrade_cmd->add_option("--pitch", degrade.pitch, "lateral pixel size in meters");
  degrade_cmd->add_option("--factor", degrade.factor, "downsample by this factor instead of writing the pool");
  degrade_cmd->add_option("--model", degrade.model, "box|nearest");
  degrade_cmd->add_option("--noise", degrade.noise, "multiplicative noise sigma on the low-resolution map");

  auto* solve_cmd = app.add_subcommand("solve", "super-resolve a low-resolution depth map");
  add_common(solve_cmd, common);
  solve_cmd->add_option("--input", solve_args.input, "low-resolution depth map")->required();
  solve_cmd->add_option("--guide", solve_args.guide, "high-resolution grayscale guide (PGM)");
  solve_cmd->add_option("--pitch", solve_args.pitch, "lateral pixel size of the input in meters");
  solve_cmd->add_option("--factor", solve_args.factor, "upsampling factor");
  solve_cmd->add_option("--model", solve_args.model, "downsampling operator: box|nearest");
  solve_cmd->add_option("--fidelity", solve_args.fidelity, "visual|depth_mse");
  solve_cmd->add_option("--lambda", solve_args.lambda, "smoothness weight");
  solve_cmd->add_option("--w", solve_args.w, "fixed visual weight (default: automatic)");
  solve_cmd->add_option("--init", solve_args.init, "bicubic|nearest");
  solve_cmd->add_option("--budget", solve_args.budget, "iterations per scale");
  solve_cmd->add_option("--tol", solve_args.tol, "relative decrease threshold");

  auto* metrics_cmd = app.add_subcommand("metrics", "compare an estimate against a reference depth map");
  add_common(metrics_cmd, common);
  metrics_cmd->add_option("--estimate", metrics.estimate, "estimated depth map")->required();
  metrics_cmd->add_option("--reference", metrics.reference, "reference depth map")->required();
  metrics_cmd->add_option("--pitch", metrics.pitch, "lateral pixel size in meters");
  metrics_cmd->add_option("--metrics", metrics.metrics, "metric ids")->delimiter(',');

  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark configuration");
  add_common(bench_cmd, common);

  auto* correlate_cmd = app.add_subcommand("correlate", "correlate metrics across benchmark rows");
  add_common(correlate_cmd, common);
  correlate_cmd->add_option("--input", correlate.input, "results CSV from bench")->required();
  correlate_cmd->add_option("--reference", correlate.reference, "reference column");
  correlate_cmd->add_option("--candidates", correlate.candidates, "candidate columns")->delimiter(',');
  correlate_cmd->add_flag("--plots", correlate.plots, "write scatter plots as PGM images");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return run_gen(common, gen);
    if (degrade_cmd->parsed()) return run_degrade(common, degrade);
    if (solve_cmd->parsed()) return run_solve(common, solve_args);
    if (metrics_cmd->parsed()) return run_metrics(common, metrics);
    if (bench_cmd->parsed()) return run_bench(common);
    if (correlate_cmd->parsed()) return run_correlate(common, correlate);
  } catch (const Error& e) {
    std::cerr << "depthvis: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "depthvis: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
