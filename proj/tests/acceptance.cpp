// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "depthvis/harness.hpp"
#include "depthvis/pyramid.hpp"
#include "depthvis/superres.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace depthvis;
using namespace depthvis::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("depthvis_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig default_config() {
  RunConfig c = load_run_config(DEPTHVIS_DEFAULT_CONFIG);
  c.output_dir.clear();
  return c;
}

const MethodSpec& method_by_id(const RunConfig& c, const std::string& id) {
  for (const auto& m : c.methods)
    if (m.id == id) return m;
  throw Error(ErrorCode::InvalidArgument, "default config lacks method " + id);
}

double column(const BenchRow& row, const std::string& metric, LightLabel label = LightLabel::NotApplicable) {
  const auto v = row.report.get(metric, label);
  if (!v) throw Error(ErrorCode::InvalidArgument, "row " + row.scene + "/" + row.method + " lacks " + metric);
  return *v;
}

// scene -> method -> row
std::map<std::string, std::map<std::string, BenchRow>> index_rows(const BenchResult& r) {
  std::map<std::string, std::map<std::string, BenchRow>> out;
  for (const auto& row : r.rows) {
    if (!row.ok()) throw Error(ErrorCode::InvalidArgument, row.scene + "/" + row.method + ": " + row.status);
    out[row.scene][row.method] = row;
  }
  return out;
}

// --- 1 -----------------------------------------------------------------------

Outcome gradient_correctness() {
  constexpr int kProbes = 50;
  const Grid a = random_grid(16, 16), b = random_grid(16, 16);
  const GradCheck g_lap = check_gradient([&](const Grid& x) { return lap1(x, b).value; }, lap1(a, b).gradient, a,
                                         kProbes, 1e-5, kDefaultPyramidLevels, &b);

  const DepthMap da = random_depth(16, 16, 2.0, 0.5), db = random_depth(16, 16, 2.0, 0.5);
  const GradCheck g_v = check_gradient([&](const Grid& x) { return mse_v(da.with_values(x), db); },
                                       mse_v_grad(da, db).gradient, da.values, kProbes);

  LossWeights w;
  w.w = 3.0;
  const GradCheck g_c =
      check_gradient([&](const Grid& x) { return combined_loss(da.with_values(x), db, w).value; },
                     combined_loss(da, db, w).gradient, da.values, kProbes, 1e-5, kDefaultPyramidLevels, &db.values);

  const bool all_probes = g_lap.probes == kProbes && g_v.probes == kProbes && g_c.probes == kProbes;
  const double worst = std::max({g_lap.worst, g_v.worst, g_c.worst});
  return {all_probes && worst < 1e-4, "worst rel err lap1 " + fmt(g_lap.worst) + ", mse_v " + fmt(g_v.worst) +
                                          ", combined " + fmt(g_c.worst) + " (" +
                                          std::to_string(g_lap.skipped + g_c.skipped) + " kink probes resampled)"};
}

// --- 2 -----------------------------------------------------------------------

Outcome basis_invariance() {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const DepthMap a = random_depth(16, 16), b = random_depth(16, 16);
    worst = std::max(worst, std::abs(mse_v(a, b, LightRig::rotated(random_rotation())) - mse_v(a, b)));
  }
  return {worst < 1e-10, "max deviation " + fmt(worst) + " over 100 pairs"};
}

// --- 3 -----------------------------------------------------------------------

Outcome oracle_equivalence() {
  std::map<std::string, double> worst;
  auto track = [&](const std::string& k, double err) { worst[k] = std::max(worst[k], err); };
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap a = random_depth(8, 8), b = random_depth(8, 8);
    track("mse_v", std::abs(mse_v(a, b) - brute_mse_v(a, b, LightRig::canonical())));

    const auto ra = basis_renderings(a, LightRig::canonical()), rb = basis_renderings(b, LightRig::canonical());
    const Rendering ga{random_grid(8, 8), Mask::Constant(8, 8, true)}, gb{random_grid(8, 8), Mask::Constant(8, 8, true)};
    track("dssim_v", std::abs(dssim_v(ga, gb) - (1.0 - brute_ssim(ga, gb))));
    track("dssim_v", std::abs(dssim_v(ra[2], rb[2]) - (1.0 - brute_ssim(ra[2], rb[2]))));

    for (const double tau : {0.01, 0.05, 0.2}) {
      track("badpix_abs", std::abs(badpix_d(a, b, tau, BadPixMode::Absolute).fraction - brute_badpix_abs(a, b, tau)));
      track("badpix_rel",
            std::abs(badpix_d(a, b, tau * 100, BadPixMode::Relative).fraction - brute_badpix_rel(a, b, tau * 100)));
    }
    for (const int shades : {1, 5, 20}) {
      track("badpix_v", std::abs(badpix_v(ga, gb, shades) - brute_badpix_v(ga, gb, shades)));
      track("badpix_v", std::abs(badpix_v(ra[0], rb[0], shades) - brute_badpix_v(ra[0], rb[0], shades)));
    }

    const DepthMap pa(random_grid(8, 8, 10.0, 10.03), DepthKind::Disparity);
    const DepthMap pb(random_grid(8, 8, 10.0, 10.03), DepthKind::Disparity);
    track("bumpiness", std::abs(bumpiness_d(pa, pb) - brute_bumpiness(pa.values, pb.values)));

    for (int levels = 1; levels <= 4; ++levels) {
      track("lap1", std::abs(lap1(a.values, b.values, levels).value - brute_lap1(a.values, b.values, levels)));
    }
  }
  bool pass = true;
  std::string detail;
  for (const auto& [k, v] : worst) {
    pass = pass && v < 1e-9;
    detail += (detail.empty() ? "" : ", ") + k + " " + fmt(v);
  }
  return {pass, detail};
}

// --- 4 -----------------------------------------------------------------------

Outcome adjoint_identity() {
  double worst = 0.0;
  for (const DownsampleModel model : {DownsampleModel::Box, DownsampleModel::Nearest}) {
    for (int i = 0; i < 100; ++i) {
      const int f = i % 3 == 0 ? 4 : 2;
      const int h = f * (1 + i % 4), w = f * (1 + i % 5);
      const Grid x = random_grid(h, w), y = random_grid(h / f, w / f);
      const double lhs = (downsample<double>(x, model, f) * y).sum();
      const double rhs = (x * downsample_adjoint<double>(y, model, f)).sum();
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return {worst < 1e-12, "max |<Dx,y> - <x,D'y>| " + fmt(worst) + " over 200 instances"};
}

// --- 5 -----------------------------------------------------------------------

Outcome offset_vs_ripple() {
  SceneSpec s;
  s.kind = SceneKind::SphereOnPlane;
  s.width = s.height = 128;
  const DepthMap gt = generate(s);
  // A broad 2 cm bump against 2 mm ripples with a 4 px wavelength.
  const DepthMap smooth = degrade_smooth(gt, 0.02, 64);
  const DepthMap ripple = degrade_high_frequency(gt, 0.002, 4, 1);
  const RenderingMetricSpec dssim{RenderingMetric::Dssim};
  const double d_smooth = rmse_d(smooth, gt), d_ripple = rmse_d(ripple, gt);
  const double v_smooth = reduce_over_lights(dssim, smooth, gt).max;
  const double v_ripple = reduce_over_lights(dssim, ripple, gt).max;
  return {d_smooth >= 1.5 * d_ripple && v_smooth <= 0.5 * v_ripple,
          "smooth offset rmse_d " + fmt(d_smooth) + " vs ripple " + fmt(d_ripple) + "; dssim_v max " + fmt(v_smooth) +
              " vs " + fmt(v_ripple)};
}

// --- 6 -----------------------------------------------------------------------

Outcome correlation_ordering() {
  RunConfig c = default_config();
  c.methods = {method_by_id(c, "pool")};
  c.metrics = {"rmse_d", "rmse_v", "dssim_v"};
  const BenchResult r = run_benchmark(c);
  const CorrelationReport rep = correlation_report(r.rows, "dssim_v.max", {"rmse_v", "rmse_d"});
  const auto& v = rep.rows[0];
  const auto& d = rep.rows[1];
  const bool defined = v.pearson && v.spearman && d.pearson && d.spearman;
  const bool pass = defined && c.scenes.size() >= 4 && v.points >= 40 && *v.pearson > *d.pearson &&
                    *v.spearman > *d.spearman;
  return {pass, std::to_string(v.points) + " points over " + std::to_string(c.scenes.size()) +
                    " scenes; pearson rmse_v " + fmt(v.pearson.value_or(NAN)) + " vs rmse_d " +
                    fmt(d.pearson.value_or(NAN)) + ", spearman " + fmt(v.spearman.value_or(NAN)) + " vs " +
                    fmt(d.spearman.value_or(NAN))};
}

// --- 7 -----------------------------------------------------------------------

Outcome superres_improvement() {
  RunConfig c = default_config();
  c.factors = {4};
  c.downsampling = {DownsampleModel::Box};
  c.noise_sigma = 0.0;
  c.methods = {method_by_id(c, "bicubic"), method_by_id(c, "solver_visual")};
  c.metrics = {"rmse_v", "rmse_v1", "dssim_v"};
  const auto rows = index_rows(run_benchmark(c));
  int rmse_wins = 0, dssim_wins = 0;
  std::string detail;
  for (const auto& [scene, by_method] : rows) {
    const BenchRow& base = by_method.at("bicubic");
    const BenchRow& ours = by_method.at("solver_visual");
    const double v_ours = column(ours, "rmse_v"), v_base = column(base, "rmse_v");
    const double w_ours = column(ours, "rmse_v1", LightLabel::Max), w_base = column(base, "rmse_v1", LightLabel::Max);
    const double s_ours = column(ours, "dssim_v", LightLabel::Max), s_base = column(base, "dssim_v", LightLabel::Max);
    rmse_wins += v_ours < v_base && w_ours < w_base;
    dssim_wins += s_ours < s_base;
    detail += (detail.empty() ? "" : "; ") + scene + " rmse_v1 max " + fmt(w_ours) + "/" + fmt(w_base) +
              " dssim max " + fmt(s_ours) + "/" + fmt(s_base);
  }
  const int n = static_cast<int>(rows.size());
  return {n >= 4 && rmse_wins == n && dssim_wins >= 3,
          "solver/bicubic: " + detail + " (rmse wins " + std::to_string(rmse_wins) + "/" + std::to_string(n) +
              ", dssim wins " + std::to_string(dssim_wins) + "/" + std::to_string(n) + ")"};
}

// --- 8 -----------------------------------------------------------------------

Outcome operator_mismatch() {
  RunConfig c = default_config();
  c.scenes.resize(2);
  c.factors = {4};
  c.downsampling = {DownsampleModel::Box};
  MethodSpec matched = method_by_id(c, "solver_visual");
  MethodSpec mismatched = matched;
  mismatched.id = "solver_visual_nearest";
  mismatched.solver_operator = DownsampleModel::Nearest;
  c.methods = {matched, mismatched};
  c.metrics = {"rmse_v"};
  const auto rows = index_rows(run_benchmark(c));
  bool pass = rows.size() == 2;
  std::string detail;
  for (const auto& [scene, by_method] : rows) {
    const double ratio = column(by_method.at(mismatched.id), "rmse_v") / column(by_method.at(matched.id), "rmse_v");
    pass = pass && ratio >= 1.1;
    detail += (detail.empty() ? "" : ", ") + scene + " " + fmt(ratio) + "x";
  }
  return {pass, "nearest/box operator rmse_v ratio " + detail};
}

// --- 9 -----------------------------------------------------------------------

Outcome monotone_and_deterministic() {
  const RunConfig c = default_config();
  int traces = 0, violations = 0;
  bool identical = true;
  for (const auto& src : c.scenes) {
    const DepthMap gt = generate(*src.generated);
    for (const Fidelity f : {Fidelity::VisualCombined, Fidelity::DepthMSE}) {
      SuperResProblem p;
      p.resampler = Resampler{DownsampleModel::Box, 4};
      p.low_res = downsample(p.resampler, gt);
      p.fidelity = f;
      p.smoothness_lambda = default_smoothness(f);
      const SolveResult a = solve(p), b = solve(p);
      ++traces;
      // Each dyadic scale solves its own objective; monotonicity is per scale.
      for (std::size_t i = 1; i < a.trace.records.size(); ++i) {
        const auto& prev = a.trace.records[i - 1];
        const auto& cur = a.trace.records[i];
        if (!std::isfinite(cur.objective) || (cur.scale == prev.scale && cur.objective > prev.objective)) {
          ++violations;
        }
      }
      identical = identical && a.trace.to_csv() == b.trace.to_csv() && (a.depth.values == b.depth.values).all();
    }
  }

  RunConfig seeded = default_config();
  seeded.scenes.resize(1);
  seeded.noise_sigma = 0.01;
  seeded.methods = {method_by_id(seeded, "bicubic"), method_by_id(seeded, "solver_visual"),
                    method_by_id(seeded, "pool")};
  const fs::path dir = scratch_dir("determinism");
  seeded.output_dir = dir / "a";
  run_benchmark(seeded);
  seeded.output_dir = dir / "b";
  run_benchmark(seeded);
  const std::string ra = read_file(dir / "a" / "results.csv"), rb = read_file(dir / "b" / "results.csv");
  const bool bench_identical = !ra.empty() && ra == rb;

  return {violations == 0 && identical && bench_identical,
          std::to_string(traces) + " traces, " + std::to_string(violations) + " increases within a scale; reruns " +
              (identical ? "identical" : "DIFFER") + "; seeded bench CSVs " +
              (bench_identical ? "byte-identical" : "DIFFER")};
}

// --- 10 ----------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DEPTHVIS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Header must match exactly; every row must have one field per column, a
// known status, and numeric metric fields.
bool csv_matches(const std::string& text, const std::vector<std::string>& header, std::size_t numeric_from,
                 std::size_t& rows, std::string& why) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || split(line) != header) {
    why = "header mismatch";
    return false;
  }
  rows = 0;
  while (std::getline(ss, line)) {
    const auto fields = split(line);
    ++rows;
    if (fields.size() != header.size()) {
      why = "row " + std::to_string(rows) + " has " + std::to_string(fields.size()) + " fields";
      return false;
    }
    for (std::size_t i = numeric_from; i < fields.size(); ++i) {
      char* end = nullptr;
      std::strtod(fields[i].c_str(), &end);
      if (fields[i].empty() || *end != '\0') {
        why = "non-numeric field '" + fields[i] + "' in row " + std::to_string(rows);
        return false;
      }
    }
  }
  return true;
}

Outcome end_to_end_bench() {
  const RunConfig c = default_config();
  const fs::path dir = scratch_dir("bench");
  const int rc = run_cli(std::string("bench --config \"") + DEPTHVIS_DEFAULT_CONFIG + "\" --out \"" + dir.string() + "\"");
  if (rc != 0) return {false, "bench exit code " + std::to_string(rc)};

  std::vector<std::string> header{"scene", "method", "factor", "downsampler", "status"};
  for (const auto& id : c.metrics)
    for (const auto& col : metric_columns(id)) header.push_back(col);
  std::size_t expected = 0;
  for (const auto& m : c.methods) {
    expected += m.type == MethodType::Pool ? 16 : c.factors.size() * c.downsampling.size();
  }
  expected *= c.scenes.size();

  std::size_t rows = 0;
  std::string why;
  const std::string results = read_file(dir / "results.csv");
  if (!csv_matches(results, header, 5, rows, why)) return {false, "results.csv: " + why};
  if (rows != expected) {
    return {false, "results.csv has " + std::to_string(rows) + " rows, expected " + std::to_string(expected)};
  }
  const BenchResult parsed = read_results_csv(dir / "results.csv");
  if (!parsed.all_ok()) return {false, "results.csv contains failed rows"};

  const int rc2 = run_cli("correlate --input \"" + (dir / "results.csv").string() + "\" --out \"" + dir.string() + "\"");
  if (rc2 != 0) return {false, "correlate exit code " + std::to_string(rc2)};
  std::size_t corr_rows = 0;
  if (!csv_matches(read_file(dir / "correlation.csv"), {"reference", "candidate", "points", "pearson", "spearman"}, 2,
                   corr_rows, why)) {
    return {false, "correlation.csv: " + why};
  }
  return {true, "exit 0, " + std::to_string(rows) + " schema-valid rows, correlation.csv with " +
                    std::to_string(corr_rows) + " rows"};
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradients match finite differences", 10, gradient_correctness},
      {2, "mse_v is light-basis invariant", 0, basis_invariance},
      {3, "metrics match brute-force oracles", 0, oracle_equivalence},
      {4, "downsampling adjoint identity", 0, adjoint_identity},
      {5, "smooth offset vs ripple ordering", 30, offset_vs_ripple},
      {6, "rmse_v tracks dssim_v better than rmse_d", 120, correlation_ordering},
      {7, "visual solver beats bicubic", 300, superres_improvement},
      {8, "operator mismatch degrades quality", 0, operator_mismatch},
      {9, "solver monotone and deterministic", 0, monotone_and_deterministic},
      {10, "end-to-end default bench", 600, end_to_end_bench},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget_s) + " s budget";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << fmt(secs) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
