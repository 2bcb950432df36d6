#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "depthvis/io.hpp"
#include "depthvis/metrics.hpp"
#include "depthvis/scenegen.hpp"
#include "depthvis/superres.hpp"

namespace depthvis {

// ---------------------------------------------------------------------------
// Degradations

DepthMap degrade_high_frequency(const DepthMap& gt, double amplitude, double wavelength_px, std::uint64_t seed);
DepthMap degrade_smooth(const DepthMap& gt, double amplitude, double sigma_px);
DepthMap degrade_offset(const DepthMap& gt, double offset);
DepthMap degrade_noise(const DepthMap& gt, double sigma, std::uint64_t seed);
DepthMap degrade_blur(const DepthMap& gt, double sigma_px);
DepthMap degrade_quantize(const DepthMap& gt, double step);

using LabeledMap = std::pair<std::string, DepthMap>;

/// Fixed family of degraded copies of `gt`: high-frequency ripples, smooth
/// bumps, constant offsets, noise, blur and quantization at several strengths.
/// Amplitudes are in meters; labels and order do not depend on the seed.
std::vector<LabeledMap> degradation_pool(const DepthMap& gt, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metric sweeps

/// Evaluates metric ids against a reference map. Depth metrics fill the n/a
/// label; per-light rendering metrics (`dssim_v`, `badpix_v<k>`, `rmse_v1`)
/// fill all six light labels. See README for the id grammar.
MetricReport evaluate_metrics(const DepthMap& estimate, const DepthMap& reference,
                              const std::vector<std::string>& metric_ids, const LightRig& rig = LightRig::canonical(),
                              std::optional<double> rmse_d_cap = std::nullopt);

/// CSV column names a metric id expands to.
std::vector<std::string> metric_columns(const std::string& metric_id);

/// Throws InvalidArgument for an unknown metric id.
void validate_metric_id(const std::string& metric_id);

// ---------------------------------------------------------------------------
// Benchmark

enum class MethodType { Bicubic, NearestUp, Solver, Pool };

struct MethodSpec {
  std::string id;
  MethodType type = MethodType::Bicubic;
  Fidelity fidelity = Fidelity::VisualCombined;
  /// Downsampling operator assumed by the solver; empty means the data's own.
  std::optional<DownsampleModel> solver_operator;
  double smoothness_lambda = 0.0;
  std::optional<double> visual_weight;  // empty: automatic
  SolveOptions solve;
};

struct SceneSource {
  std::string id;
  std::optional<SceneSpec> generated;
  std::optional<SceneManifest> manifest;
};

struct RunConfig {
  std::vector<SceneSource> scenes;
  std::vector<int> factors;
  std::vector<DownsampleModel> downsampling{DownsampleModel::Box};
  std::vector<MethodSpec> methods;
  std::vector<std::string> metrics;
  LightRig rig;
  std::optional<double> rmse_d_cap = 0.5;
  double noise_sigma = 0.0;  // multiplicative noise on low-resolution inputs
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

/// Parses a run configuration (JSON). Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses one scene description, either bare or wrapped as {"generate": {...}}.
SceneSpec parse_scene_spec(const std::string& json_text);

struct BenchRow {
  std::string scene;
  std::string method;
  int factor = 1;
  std::string downsampler = "none";
  std::string status = "ok";  ///< "ok" or an error code such as "diverged"
  std::string detail;         ///< failure message; not written to CSV
  MetricReport report;

  bool ok() const { return status == "ok"; }
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<std::string> metric_ids;

  bool all_ok() const;
  std::vector<std::string> columns() const;
  std::string to_csv() const;
};

/// Runs every scene x factor x downsampler x method job (pool rows once per
/// scene), isolating failures per row. Writes `results.csv` into the output
/// directory when one is set.
BenchResult run_benchmark(const RunConfig& config);

/// Parses a results CSV written by `run_benchmark`.
BenchResult read_results_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Correlation

struct CorrelationRow {
  std::string candidate;
  std::optional<double> pearson;   // empty when undefined (constant data)
  std::optional<double> spearman;
  std::size_t points = 0;
};

struct CorrelationReport {
  std::string reference;
  std::vector<CorrelationRow> rows;
  std::vector<std::string> point_labels;           // scene/method per point
  std::vector<std::vector<double>> points;         // reference, then candidates

  std::string to_csv() const;
  std::string scatter_csv() const;
};

/// Column ids are `metric` or `metric.label` (e.g. `dssim_v.max`). Only rows
/// with status ok that carry every requested column contribute points.
CorrelationReport correlation_report(const std::vector<BenchRow>& rows, const std::string& reference,
                                     const std::vector<std::string>& candidates);

/// Writes a grayscale scatter plot (binary PGM) of ys against xs.
void write_scatter_plot(const std::filesystem::path& path, const std::vector<double>& xs,
                        const std::vector<double>& ys, int size = 256);

}  // namespace depthvis
