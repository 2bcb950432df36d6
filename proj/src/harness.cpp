#include "depthvis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace depthvis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

LightLabel label_from_string(const std::string& s) {
  for (LightLabel l : kLightLabels) {
    if (to_string(l) == s) return l;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown light label '" + s + "'");
}

// Splits `metric.label`; a bare metric maps to n/a.
std::pair<std::string, LightLabel> split_column(const std::string& column) {
  const auto dot = column.rfind('.');
  if (dot == std::string::npos) return {column, LightLabel::NotApplicable};
  return {column.substr(0, dot), label_from_string(column.substr(dot + 1))};
}

enum class MetricFamily { DepthScalar, PerLight };

struct ParsedMetric {
  MetricFamily family = MetricFamily::DepthScalar;
  std::string id;
  // Depth metrics
  enum { RmseD, MseV, RmseV, Bumpiness, BadPixAbs, BadPixRel } depth = RmseD;
  double tau = 0.0;
  RenderingMetricSpec rendering;
};

bool parse_number_suffix(const std::string& s, const std::string& prefix, const std::string& suffix, double& out) {
  if (s.size() <= prefix.size() + suffix.size()) return false;
  if (s.compare(0, prefix.size(), prefix) != 0) return false;
  if (s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
  const std::string num = s.substr(prefix.size(), s.size() - prefix.size() - suffix.size());
  char* end = nullptr;
  out = std::strtod(num.c_str(), &end);
  return end == num.c_str() + num.size() && std::isfinite(out) && out >= 0;
}

ParsedMetric parse_metric(const std::string& id) {
  ParsedMetric m;
  m.id = id;
  double tau = 0.0;
  if (id == "rmse_d") {
    m.depth = ParsedMetric::RmseD;
  } else if (id == "mse_v") {
    m.depth = ParsedMetric::MseV;
  } else if (id == "rmse_v") {
    m.depth = ParsedMetric::RmseV;
  } else if (id == "bumpiness_d") {
    m.depth = ParsedMetric::Bumpiness;
  } else if (parse_number_suffix(id, "badpix_d_", "cm", tau)) {
    m.depth = ParsedMetric::BadPixAbs;
    m.tau = tau / 100.0;
  } else if (parse_number_suffix(id, "badpix_d_", "pct", tau)) {
    m.depth = ParsedMetric::BadPixRel;
    m.tau = tau;
  } else if (id == "dssim_v") {
    m.family = MetricFamily::PerLight;
    m.rendering.metric = RenderingMetric::Dssim;
  } else if (id == "rmse_v1") {
    m.family = MetricFamily::PerLight;
    m.rendering.metric = RenderingMetric::Rmse;
  } else if (parse_number_suffix(id, "badpix_v", "", tau) && tau == std::floor(tau)) {
    m.family = MetricFamily::PerLight;
    m.rendering.metric = RenderingMetric::BadPix;
    m.rendering.tau_shades = static_cast<int>(tau);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown metric id '" + id + "'");
  }
  return m;
}

Grid gaussian_blur(const Grid& g, const Mask& mask, double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
  const Eigen::Index h = g.rows(), w = g.cols();
  const Grid valid = mask.cast<double>();
  auto pass = [&](const Grid& values, const Grid& weights, bool horizontal, Grid& out_v, Grid& out_w) {
    out_v = Grid::Zero(h, w);
    out_w = Grid::Zero(h, w);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        for (int k = -radius; k <= radius; ++k) {
          const Eigen::Index yy = horizontal ? y : std::clamp<Eigen::Index>(y + k, 0, h - 1);
          const Eigen::Index xx = horizontal ? std::clamp<Eigen::Index>(x + k, 0, w - 1) : x;
          const double c = kernel[static_cast<std::size_t>(k + radius)];
          out_v(y, x) += c * values(yy, xx);
          out_w(y, x) += c * weights(yy, xx);
        }
      }
    }
  };
  Grid v1, w1, v2, w2;
  pass(g * valid, valid, true, v1, w1);
  pass(v1, w1, false, v2, w2);
  return (w2 > 0).select(v2 / w2, g);
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

DepthMap degrade_high_frequency(const DepthMap& gt, double amplitude, double wavelength_px, std::uint64_t seed) {
  require(wavelength_px > 0, ErrorCode::InvalidArgument, "wavelength must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const double px = phase(rng), py = phase(rng);
  DepthMap out = gt;
  const double k = 2 * std::numbers::pi / wavelength_px;
  for (Eigen::Index y = 0; y < gt.height(); ++y) {
    for (Eigen::Index x = 0; x < gt.width(); ++x) {
      out.values(y, x) += amplitude * std::sin(k * x + px) * std::sin(k * y + py);
    }
  }
  return out;
}

DepthMap degrade_smooth(const DepthMap& gt, double amplitude, double sigma_px) {
  require(sigma_px > 0, ErrorCode::InvalidArgument, "bump width must be positive");
  DepthMap out = gt;
  const double cx = (gt.width() - 1) / 2.0, cy = (gt.height() - 1) / 2.0;
  for (Eigen::Index y = 0; y < gt.height(); ++y) {
    for (Eigen::Index x = 0; x < gt.width(); ++x) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      out.values(y, x) += amplitude * std::exp(-0.5 * r2 / (sigma_px * sigma_px));
    }
  }
  return out;
}

DepthMap degrade_offset(const DepthMap& gt, double offset) {
  DepthMap out = gt;
  out.values += offset;
  return out;
}

DepthMap degrade_noise(const DepthMap& gt, double sigma, std::uint64_t seed) {
  require(sigma >= 0, ErrorCode::InvalidArgument, "noise sigma must be nonnegative");
  DepthMap out = gt;
  if (sigma == 0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (Eigen::Index y = 0; y < gt.height(); ++y) {
    for (Eigen::Index x = 0; x < gt.width(); ++x) {
      if (gt.valid(y, x)) out.values(y, x) += gauss(rng);
    }
  }
  return out;
}

DepthMap degrade_blur(const DepthMap& gt, double sigma_px) {
  require(sigma_px >= 0, ErrorCode::InvalidArgument, "blur sigma must be nonnegative");
  if (sigma_px == 0) return gt;
  return gt.with_values(gaussian_blur(gt.values, gt.mask, sigma_px));
}

DepthMap degrade_quantize(const DepthMap& gt, double step) {
  require(step >= 0, ErrorCode::InvalidArgument, "quantization step must be nonnegative");
  if (step == 0) return gt;
  return gt.with_values((gt.values / step).round() * step);
}

std::vector<LabeledMap> degradation_pool(const DepthMap& gt, std::uint64_t seed) {
  std::vector<LabeledMap> pool;
  std::uint64_t n = 0;
  const double bump_sigma = static_cast<double>(std::min(gt.width(), gt.height())) / 4.0;
  for (double a : {0.0005, 0.001, 0.002}) {
    pool.emplace_back("ripple_" + format_number(a * 1000) + "mm",
                      degrade_high_frequency(gt, a, 4.0, mix_seed(seed, {++n})));
  }
  for (double b : {0.02, 0.05, 0.1}) {
    pool.emplace_back("bump_" + format_number(b * 100) + "cm", degrade_smooth(gt, b, bump_sigma));
  }
  for (double c : {0.02, 0.05}) {
    pool.emplace_back("offset_" + format_number(c * 100) + "cm", degrade_offset(gt, c));
  }
  for (double s : {0.0005, 0.001, 0.002}) {
    pool.emplace_back("noise_" + format_number(s * 1000) + "mm", degrade_noise(gt, s, mix_seed(seed, {++n})));
  }
  for (double r : {1.0, 2.0, 4.0}) {
    pool.emplace_back("blur_" + format_number(r) + "px", degrade_blur(gt, r));
  }
  for (double q : {0.002, 0.005}) {
    pool.emplace_back("quantize_" + format_number(q * 1000) + "mm", degrade_quantize(gt, q));
  }
  return pool;
}

// ---------------------------------------------------------------------------

void validate_metric_id(const std::string& metric_id) { parse_metric(metric_id); }

std::vector<std::string> metric_columns(const std::string& metric_id) {
  const ParsedMetric m = parse_metric(metric_id);
  if (m.family == MetricFamily::DepthScalar) return {metric_id};
  std::vector<std::string> cols;
  for (LightLabel l : kLightLabels) cols.push_back(metric_id + "." + to_string(l));
  return cols;
}

MetricReport evaluate_metrics(const DepthMap& estimate, const DepthMap& reference,
                              const std::vector<std::string>& metric_ids, const LightRig& rig,
                              std::optional<double> rmse_d_cap) {
  MetricReport report;
  for (const auto& id : metric_ids) {
    const ParsedMetric m = parse_metric(id);
    if (m.family == MetricFamily::PerLight) {
      report.set(id, reduce_over_lights(m.rendering, estimate, reference, rig));
      continue;
    }
    double value = 0.0;
    switch (m.depth) {
      case ParsedMetric::RmseD: value = rmse_d(estimate, reference, rmse_d_cap); break;
      case ParsedMetric::MseV: value = mse_v(estimate, reference, rig); break;
      case ParsedMetric::RmseV: value = rmse_v(estimate, reference, rig); break;
      case ParsedMetric::Bumpiness: value = bumpiness_d(estimate, reference, reference.intrinsics); break;
      case ParsedMetric::BadPixAbs: value = badpix_d(estimate, reference, m.tau, BadPixMode::Absolute).fraction; break;
      case ParsedMetric::BadPixRel: value = badpix_d(estimate, reference, m.tau, BadPixMode::Relative).fraction; break;
    }
    report.set(id, LightLabel::NotApplicable, value);
  }
  return report;
}

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  require(!scenes.empty(), ErrorCode::InvalidArgument, "config needs at least one scene");
  require(!methods.empty(), ErrorCode::InvalidArgument, "config needs at least one method");
  require(!metrics.empty(), ErrorCode::InvalidArgument, "config needs at least one metric");
  const bool needs_factors = std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) {
    return m.type != MethodType::Pool;
  });
  require(!needs_factors || !factors.empty() || std::all_of(scenes.begin(), scenes.end(), [](const SceneSource& s) {
            return s.manifest.has_value();
          }),
          ErrorCode::InvalidArgument, "config needs at least one factor");
  require(!downsampling.empty(), ErrorCode::InvalidArgument, "config needs at least one downsampling model");
  require(jobs >= 1, ErrorCode::InvalidArgument, "jobs must be >= 1");
  for (int f : factors) require(f >= 2, ErrorCode::InvalidArgument, "factors must be >= 2");
  for (const auto& id : metrics) validate_metric_id(id);
  for (const auto& s : scenes) {
    require(s.generated.has_value() != s.manifest.has_value(), ErrorCode::InvalidArgument,
            "scene '" + s.id + "' must be generated or loaded, not both");
    if (s.generated) s.generated->validate();
  }
  rig.validate();
}

namespace {

Vec3 vec3_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  require(v.size() == 3, ErrorCode::InvalidArgument, "light directions need 3 components");
  return {v[0], v[1], v[2]};
}

SceneSpec scene_spec_from_json(const json& j) {
  SceneSpec s;
  s.kind = scene_kind_from_string(j.at("kind").get<std::string>());
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.depth_range = j.value("depth_range", s.depth_range);
  s.pixel_pitch = j.value("pixel_pitch", s.pixel_pitch);
  if (j.contains("params")) {
    const json& p = j["params"];
    SceneParams& q = s.params;
    q.radius = p.value("radius", q.radius);
    q.sink = p.value("sink", q.sink);
    q.length = p.value("length", q.length);
    q.height = p.value("height", q.height);
    q.half_size = p.value("half_size", q.half_size);
    q.bevel = p.value("bevel", q.bevel);
    q.slope_x = p.value("slope_x", q.slope_x);
    q.slope_y = p.value("slope_y", q.slope_y);
    q.amplitude = p.value("amplitude", q.amplitude);
    q.period = p.value("period", q.period);
    q.angle = p.value("angle", q.angle);
  }
  return s;
}

MethodSpec method_from_json(const json& j) {
  MethodSpec m;
  const std::string type = j.at("type").get<std::string>();
  m.id = j.value("id", type);
  if (type == "bicubic") {
    m.type = MethodType::Bicubic;
  } else if (type == "nearest") {
    m.type = MethodType::NearestUp;
  } else if (type == "pool") {
    m.type = MethodType::Pool;
  } else if (type == "solver") {
    m.type = MethodType::Solver;
    m.fidelity = fidelity_from_string(j.value("fidelity", std::string("visual")));
    if (j.contains("operator")) m.solver_operator = downsample_model_from_string(j["operator"].get<std::string>());
    m.smoothness_lambda = j.value("lambda", default_smoothness(m.fidelity));
    if (j.contains("w")) m.visual_weight = j["w"].get<double>();
    m.solve.budget = j.value("budget", m.solve.budget);
    m.solve.tol = j.value("tol", m.solve.tol);
    m.solve.init = init_method_from_string(j.value("init", std::string("bicubic")));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown method type '" + type + "'");
  }
  return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir) {
  RunConfig c;
  try {
    const json doc = json::parse(json_text);
    c.seed = doc.value("seed", std::uint64_t{0});
    c.jobs = doc.value("jobs", 1);
    if (doc.contains("output")) {
      const fs::path out = doc["output"].get<std::string>();
      c.output_dir = out.is_absolute() || base_dir.empty() ? out : base_dir / out;
    }
    c.factors = doc.value("factors", std::vector<int>{});
    if (doc.contains("downsampling")) {
      c.downsampling.clear();
      for (const auto& d : doc["downsampling"]) c.downsampling.push_back(downsample_model_from_string(d.get<std::string>()));
    }
    c.noise_sigma = doc.value("noise_sigma", 0.0);
    if (doc.contains("rmse_d_cap")) {
      c.rmse_d_cap = doc["rmse_d_cap"].is_null() ? std::nullopt : std::optional<double>(doc["rmse_d_cap"].get<double>());
    }
    if (doc.contains("rig")) {
      const json& r = doc["rig"];
      if (r.contains("basis")) {
        const auto& b = r["basis"];
        require(b.size() == 3, ErrorCode::InvalidArgument, "rig basis needs 3 vectors");
        for (std::size_t m = 0; m < 3; ++m) c.rig.basis[m] = vec3_from_json(b[m]).normalized();
      }
      if (r.contains("extra")) c.rig.extra = vec3_from_json(r["extra"]).normalized();
    }
    for (const auto& s : doc.at("scenes")) {
      if (s.contains("manifest")) {
        fs::path p = s["manifest"].get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        for (auto& m : load_manifest(p)) {
          SceneSource src;
          src.id = m.scene_id;
          src.manifest = std::move(m);
          c.scenes.push_back(std::move(src));
        }
      } else {
        SceneSource src;
        src.generated = scene_spec_from_json(s.at("generate"));
        src.id = s.value("id", to_string(src.generated->kind));
        c.scenes.push_back(std::move(src));
      }
    }
    for (const auto& m : doc.at("methods")) c.methods.push_back(method_from_json(m));
    c.metrics = doc.at("metrics").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

SceneSpec parse_scene_spec(const std::string& json_text) {
  try {
    const json doc = json::parse(json_text);
    SceneSpec s = scene_spec_from_json(doc.contains("generate") ? doc["generate"] : doc);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("scene spec: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Unreadable, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------

namespace {

struct LoadedScene {
  std::string id;
  DepthMap gt;
  std::optional<Grid> guide;
  std::vector<int> factors;
  std::string error;
  std::string error_status;
};

// Rows carry the error code as status; the message goes to the detail field.
void mark_failed(BenchRow& row, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  row.status = err ? to_string(err->code()) : "error";
  row.detail = e.what();
}

LoadedScene load_scene(const SceneSource& src, const RunConfig& config) {
  LoadedScene s;
  s.id = src.id;
  try {
    if (src.generated) {
      s.gt = generate(*src.generated);
      s.factors = config.factors;
    } else {
      const SceneManifest& m = *src.manifest;
      s.gt = load_depth(m.ground_truth_path, m.format, m.kind);
      s.gt.intrinsics = m.intrinsics;
      s.gt.pixel_pitch = m.pixel_pitch;
      m.validate(s.gt.width(), s.gt.height());
      if (m.guide_path) s.guide = load_gray(*m.guide_path);
      s.factors = m.scale_factors;
    }
  } catch (const std::exception& e) {
    s.error = e.what();
    const auto* err = dynamic_cast<const Error*>(&e);
    s.error_status = err ? to_string(err->code()) : "error";
  }
  return s;
}

DepthMap run_method(const MethodSpec& method, const DepthMap& low, const Resampler& data_model,
                    const std::optional<Grid>& guide) {
  switch (method.type) {
    case MethodType::Bicubic: return upsample_bicubic(low, data_model.factor);
    case MethodType::NearestUp: return upsample_nearest(low, data_model.factor);
    case MethodType::Solver: {
      SuperResProblem p;
      p.low_res = low;
      p.resampler = Resampler{method.solver_operator.value_or(data_model.model), data_model.factor};
      if (guide && guide->rows() == low.height() * data_model.factor && guide->cols() == low.width() * data_model.factor) {
        p.guide = guide;
      }
      p.fidelity = method.fidelity;
      p.smoothness_lambda = method.smoothness_lambda;
      p.auto_weight = !method.visual_weight.has_value();
      p.weights.w = method.visual_weight.value_or(1.0);
      return solve(p, method.solve).depth;
    }
    case MethodType::Pool: break;
  }
  throw Error(ErrorCode::InvalidArgument, "pool is not an upsampling method");
}

using Job = std::function<std::vector<BenchRow>()>;

}  // namespace

bool BenchResult::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.ok(); });
}

std::vector<std::string> BenchResult::columns() const {
  std::vector<std::string> cols{"scene", "method", "factor", "downsampler", "status"};
  for (const auto& id : metric_ids) {
    for (auto& c : metric_columns(id)) cols.push_back(std::move(c));
  }
  return cols;
}

std::string BenchResult::to_csv() const {
  std::ostringstream out;
  const auto cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : rows) {
    out << sanitize(row.scene) << ',' << sanitize(row.method) << ',' << row.factor << ',' << row.downsampler << ','
        << sanitize(row.status);
    for (std::size_t i = 5; i < cols.size(); ++i) {
      const auto [metric, label] = split_column(cols[i]);
      const auto v = row.report.get(metric, label);
      out << ',' << (v ? format_number(*v) : "");
    }
    out << '\n';
  }
  return out.str();
}

BenchResult run_benchmark(const RunConfig& config) {
  config.validate();
  BenchResult result;
  result.metric_ids = config.metrics;

  std::vector<LoadedScene> scenes;
  for (const auto& src : config.scenes) scenes.push_back(load_scene(src, config));

  std::vector<Job> jobs;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const LoadedScene& scene = scenes[si];
    if (!scene.error.empty()) {
      jobs.push_back([&scene] {
        BenchRow row;
        row.scene = scene.id;
        row.method = "*";
        row.status = scene.error_status;
        row.detail = scene.error;
        return std::vector<BenchRow>{row};
      });
      continue;
    }
    for (int factor : scene.factors) {
      for (std::size_t di = 0; di < config.downsampling.size(); ++di) {
        for (const auto& method : config.methods) {
          if (method.type == MethodType::Pool) continue;
          const Resampler model{config.downsampling[di], factor};
          const std::uint64_t noise_seed = mix_seed(config.seed, {si, static_cast<std::uint64_t>(factor), di});
          jobs.push_back([&config, &scene, &method, model, noise_seed] {
            BenchRow row;
            row.scene = scene.id;
            row.method = method.id;
            row.factor = model.factor;
            row.downsampler = to_string(model.model);
            row.report.scene_id = row.scene;
            row.report.method_id = row.method;
            try {
              DepthMap low = downsample(model, scene.gt);
              if (config.noise_sigma > 0) low = add_multiplicative_noise(low, config.noise_sigma, noise_seed);
              const DepthMap estimate = run_method(method, low, model, scene.guide);
              MetricReport rep = evaluate_metrics(estimate, scene.gt, config.metrics, config.rig, config.rmse_d_cap);
              row.report.entries = std::move(rep.entries);
            } catch (const std::exception& e) {
              mark_failed(row, e);
            }
            return std::vector<BenchRow>{row};
          });
        }
      }
    }
    for (const auto& method : config.methods) {
      if (method.type != MethodType::Pool) continue;
      const std::uint64_t pool_seed = mix_seed(config.seed, {si, 0xb001ULL});
      jobs.push_back([&config, &scene, &method, pool_seed] {
        std::vector<BenchRow> rows;
        try {
          for (auto& [label, map] : degradation_pool(scene.gt, pool_seed)) {
            BenchRow row;
            row.scene = scene.id;
            row.method = method.id + ":" + label;
            row.report.scene_id = row.scene;
            row.report.method_id = row.method;
            try {
              row.report.entries = evaluate_metrics(map, scene.gt, config.metrics, config.rig, config.rmse_d_cap).entries;
            } catch (const std::exception& e) {
              mark_failed(row, e);
            }
            rows.push_back(std::move(row));
          }
        } catch (const std::exception& e) {
          BenchRow row;
          row.scene = scene.id;
          row.method = method.id;
          mark_failed(row, e);
          rows.push_back(std::move(row));
        }
        return rows;
      });
    }
  }

  // Workers fill slots by job index, so output order is independent of timing.
  std::vector<std::vector<BenchRow>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) slots[i] = jobs[i]();
  };
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (auto& s : slots) {
    for (auto& r : s) result.rows.push_back(std::move(r));
  }

  if (!config.output_dir.empty()) {
    fs::create_directories(config.output_dir);
    const fs::path path = config.output_dir / "results.csv";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Unwritable, "cannot write " + path.string());
    out << result.to_csv();
    if (!out) throw Error(ErrorCode::Unwritable, "write failed for " + path.string());
  }
  return result;
}

BenchResult read_results_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Unreadable, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "empty results file");
  const auto cols = split(line, ',');
  const std::vector<std::string> fixed{"scene", "method", "factor", "downsampler", "status"};
  require(cols.size() >= fixed.size() && std::equal(fixed.begin(), fixed.end(), cols.begin()),
          ErrorCode::MalformedHeader, "results header must start with " "scene,method,factor,downsampler,status");
  BenchResult result;
  for (std::size_t i = fixed.size(); i < cols.size(); ++i) {
    const std::string metric = split_column(cols[i]).first;
    if (std::find(result.metric_ids.begin(), result.metric_ids.end(), metric) == result.metric_ids.end()) {
      result.metric_ids.push_back(metric);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == cols.size(), ErrorCode::DimensionMismatch, "results row has the wrong column count");
    BenchRow row;
    row.scene = cells[0];
    row.method = cells[1];
    row.factor = std::stoi(cells[2]);
    row.downsampler = cells[3];
    row.status = cells[4];
    row.report.scene_id = row.scene;
    row.report.method_id = row.method;
    for (std::size_t i = fixed.size(); i < cols.size(); ++i) {
      if (cells[i].empty()) continue;
      const auto [metric, label] = split_column(cols[i]);
      row.report.set(metric, label, std::stod(cells[i]));
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

// ---------------------------------------------------------------------------

CorrelationReport correlation_report(const std::vector<BenchRow>& rows, const std::string& reference,
                                     const std::vector<std::string>& candidates) {
  CorrelationReport report;
  report.reference = reference;
  std::vector<std::pair<std::string, LightLabel>> keys{split_column(reference)};
  for (const auto& c : candidates) keys.push_back(split_column(c));

  for (const auto& row : rows) {
    if (!row.ok()) continue;
    std::vector<double> point;
    for (const auto& [metric, label] : keys) {
      const auto v = row.report.get(metric, label);
      if (!v) break;
      point.push_back(*v);
    }
    if (point.size() != keys.size()) continue;
    report.point_labels.push_back(row.scene + "/" + row.method);
    report.points.push_back(std::move(point));
  }
  require(report.points.size() >= 3, ErrorCode::InvalidArgument,
          "correlation needs at least 3 rows carrying every requested metric");

  std::vector<double> ref;
  for (const auto& p : report.points) ref.push_back(p[0]);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    std::vector<double> vals;
    for (const auto& p : report.points) vals.push_back(p[c + 1]);
    CorrelationRow row;
    row.candidate = candidates[c];
    row.points = vals.size();
    try {
      row.pearson = pearson(vals, ref);
      row.spearman = spearman(vals, ref);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput) throw;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string CorrelationReport::to_csv() const {
  std::ostringstream out;
  out << "reference,candidate,points,pearson,spearman\n";
  for (const auto& r : rows) {
    out << reference << ',' << r.candidate << ',' << r.points << ','
        << (r.pearson ? format_number(*r.pearson) : "undefined") << ','
        << (r.spearman ? format_number(*r.spearman) : "undefined") << '\n';
  }
  return out.str();
}

std::string CorrelationReport::scatter_csv() const {
  std::ostringstream out;
  out << "point," << reference;
  for (const auto& r : rows) out << ',' << r.candidate;
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << sanitize(point_labels[i]);
    for (double v : points[i]) out << ',' << format_number(v);
    out << '\n';
  }
  return out.str();
}

void write_scatter_plot(const fs::path& path, const std::vector<double>& xs, const std::vector<double>& ys, int size) {
  require(xs.size() == ys.size() && !xs.empty(), ErrorCode::InvalidArgument, "scatter plot needs matching points");
  require(size >= 16, ErrorCode::InvalidArgument, "plot too small");
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  const double xr = *xmax - *xmin > 0 ? *xmax - *xmin : 1.0;
  const double yr = *ymax - *ymin > 0 ? *ymax - *ymin : 1.0;
  const int margin = size / 16;
  const int span = size - 2 * margin - 1;
  std::string img(static_cast<std::size_t>(size) * size, static_cast<char>(255));
  auto plot = [&](int x, int y, unsigned char v) {
    if (x >= 0 && y >= 0 && x < size && y < size) img[static_cast<std::size_t>(y) * size + x] = static_cast<char>(v);
  };
  for (int i = margin; i < size - margin; ++i) {
    plot(i, size - margin, 128);
    plot(margin - 1, i, 128);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int px = margin + static_cast<int>(std::lround((xs[i] - *xmin) / xr * span));
    const int py = size - 1 - margin - static_cast<int>(std::lround((ys[i] - *ymin) / yr * span));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) plot(px + dx, py + dy, 0);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Unwritable, "cannot write " + path.string());
  out << "P5\n" << size << ' ' << size << "\n255\n";
  out.write(img.data(), static_cast<std::streamsize>(img.size()));
  if (!out) throw Error(ErrorCode::Unwritable, "write failed for " + path.string());
}

}  // namespace depthvis
