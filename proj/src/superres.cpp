#include "depthvis/superres.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "depthvis/pyramid.hpp"

namespace depthvis {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kWindow = 10;
constexpr int kMaxHalvings = 60;
// Each coarser coefficient grid is scaled by this gain relative to the next finer one.
constexpr double kLevelGain = 0.5;
// Huber thresholds for visual-fidelity search directions, relative to the depth range.
constexpr double kHuberStart = 1e-2;
constexpr double kHuberFloor = 1e-8;

struct Evaluation {
  double objective = 0.0;
  double fidelity = 0.0;
  double smoothness = 0.0;
  Grid gradient;
};

// One level of the coarse-to-fine schedule.
struct ScaleProblem {
  Resampler op;
  DepthMap target;  // hole-filled low-resolution input
  Mask target_mask;
  Fidelity fidelity = Fidelity::DepthMSE;
  LossWeights weights;
  int levels = 1;
  LightRig rig;
  double lambda = 0.0;
  Grid wx, wy;  // smoothness weights for horizontal and vertical edges
  double pitch = 1.0;
  double huber = 0.0;  // Lap1 gradient smoothing for search directions

  DepthMap low_map(const Grid& low) const {
    DepthMap m = target;
    m.values = low;
    m.mask.setConstant(true);
    return m;
  }
};

// Edge weights exp(-|dI| / mean|dI|); ones without a guide.
std::pair<Grid, Grid> smoothness_weights(const std::optional<Grid>& guide, Eigen::Index h, Eigen::Index w) {
  Grid wx = Grid::Ones(h, std::max<Eigen::Index>(w - 1, 0));
  Grid wy = Grid::Ones(std::max<Eigen::Index>(h - 1, 0), w);
  if (!guide) return {wx, wy};
  const Grid& g = *guide;
  const Grid gx = (g.rightCols(w - 1) - g.leftCols(w - 1)).abs();
  const Grid gy = (g.bottomRows(h - 1) - g.topRows(h - 1)).abs();
  const double mean = (gx.sum() + gy.sum()) / static_cast<double>(gx.size() + gy.size());
  if (!(mean > 0)) return {wx, wy};
  return {(-gx / mean).exp(), (-gy / mean).exp()};
}

double fidelity_terms(const ScaleProblem& sp, const Grid& low, Grid* grad_low) {
  if (sp.fidelity == Fidelity::DepthMSE) {
    const Grid valid = sp.target_mask.cast<double>();
    const double n = valid.sum();
    const Grid r = (low - sp.target.values) * valid;
    if (grad_low) *grad_low = 2.0 / n * r;
    return r.square().sum() / n;
  }
  LossValueGrad lg = combined_loss(sp.low_map(low), sp.target, sp.weights, sp.levels, sp.rig,
                                   NormalModel::HeightField, sp.huber);
  if (grad_low) *grad_low = std::move(lg.gradient);
  return lg.value;
}

Evaluation evaluate(const ScaleProblem& sp, const Grid& d, bool with_gradient) {
  Evaluation e;
  const Grid low = downsample<double>(d, sp.op.model, sp.op.factor);
  Grid grad_low;
  e.fidelity = fidelity_terms(sp, low, with_gradient ? &grad_low : nullptr);
  if (with_gradient) e.gradient = downsample_adjoint<double>(grad_low, sp.op.model, sp.op.factor);

  if (sp.lambda > 0) {
    const Eigen::Index h = d.rows(), w = d.cols();
    const auto n = static_cast<double>(d.size());
    const Grid dx = d.rightCols(w - 1) - d.leftCols(w - 1);
    const Grid dy = d.bottomRows(h - 1) - d.topRows(h - 1);
    e.smoothness = ((sp.wx * dx.square()).sum() + (sp.wy * dy.square()).sum()) / n;
    if (with_gradient) {
      const Grid gx = 2.0 * sp.lambda / n * sp.wx * dx;
      const Grid gy = 2.0 * sp.lambda / n * sp.wy * dy;
      e.gradient.rightCols(w - 1) += gx;
      e.gradient.leftCols(w - 1) -= gx;
      e.gradient.bottomRows(h - 1) += gy;
      e.gradient.topRows(h - 1) -= gy;
    }
  }
  e.objective = e.fidelity + sp.lambda * e.smoothness;
  if (!std::isfinite(e.objective)) {
    throw Error(ErrorCode::Diverged, "objective became non-finite; check the loss weights");
  }
  return e;
}

std::vector<int> schedule(int factor) {
  std::vector<int> scales;
  if ((factor & (factor - 1)) == 0) {
    for (int k = 2; k <= factor; k *= 2) scales.push_back(k);
  } else {
    scales.push_back(factor);
  }
  return scales;
}

// Multiscale pixel parametrization d = sum_j s_j * expand^j(c_j), where c_0
// lives on the output grid and c_j on grids halved j times.
class MultiscaleField {
 public:
  MultiscaleField(const Grid& init, int levels, double level_gain) {
    coeffs_.push_back(init);
    gains_.push_back(1.0);
    for (int j = 1; j < levels; ++j) {
      const Grid& prev = coeffs_.back();
      coeffs_.push_back(Grid::Zero(prev.rows() / 2, prev.cols() / 2));
      gains_.push_back(gains_.back() * level_gain);
    }
  }

  Grid synthesize() const { return synthesize(coeffs_); }

  Grid synthesize(const std::vector<Grid>& c) const {
    Grid acc = c.back() * gains_.back();
    for (int j = static_cast<int>(c.size()) - 2; j >= 0; --j) acc = pyramid::expand<double>(acc) + gains_[j] * c[j];
    return acc;
  }

  std::vector<Grid> pullback(const Grid& g) const {
    std::vector<Grid> out;
    Grid cur = g;
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      if (j > 0) cur = pyramid::expand_adjoint<double>(cur);
      out.push_back(gains_[j] * cur);
    }
    return out;
  }

  std::vector<Grid>& coeffs() { return coeffs_; }

 private:
  std::vector<Grid> coeffs_;
  std::vector<double> gains_;
};

double squared_norm(const std::vector<Grid>& v) {
  double s = 0.0;
  for (const auto& g : v) s += g.square().sum();
  return s;
}

// Gradient descent with Armijo backtracking on one scale, over the multiscale
// field. For the visual fidelity the search direction comes from a Huber-smoothed
// Lap1 whose threshold shrinks whenever progress stalls; the accepted steps are
// always tested against the exact objective, so the trace stays monotone.
Grid descend(ScaleProblem sp, Grid d, const SolveOptions& options, int scale, SolveTrace& trace, int& iteration) {
  int levels = 1;
  while ((Eigen::Index{1} << levels) <= scale && d.rows() % (Eigen::Index{1} << levels) == 0 &&
         d.cols() % (Eigen::Index{1} << levels) == 0) {
    ++levels;
  }
  MultiscaleField field(d, levels, kLevelGain);
  const double range = sp.target.values.maxCoeff() - sp.target.values.minCoeff();
  const double span = range > 0 ? range : 1.0;
  double huber_floor = 0.0;
  if (sp.fidelity == Fidelity::VisualCombined) {
    sp.huber = kHuberStart * span;
    huber_floor = kHuberFloor * span;
  }

  Evaluation cur = evaluate(sp, d, true);
  trace.records.push_back({iteration++, scale, cur.objective, cur.fidelity, cur.smoothness, 0.0});
  std::vector<double> history{cur.objective};
  std::vector<Grid> grad = field.pullback(cur.gradient);
  const double gmax = field.synthesize(grad).abs().maxCoeff();
  double step = gmax > 0 ? 1e-2 * span / gmax : 1.0;
  const double initial_step = step;

  // Shrinks the smoothing and refreshes the direction; false once exhausted.
  auto tighten = [&] {
    if (sp.huber <= huber_floor) return false;
    sp.huber = std::max(sp.huber * 0.1, huber_floor);
    cur = evaluate(sp, d, true);
    grad = field.pullback(cur.gradient);
    step = std::max(step, initial_step);
    history.assign(1, cur.objective);
    return true;
  };

  for (int it = 0; it < options.budget; ++it) {
    if (cur.objective <= 1e-30) break;
    const double gnorm2 = squared_norm(grad);
    if (!(gnorm2 > 0)) break;
    const Grid direction = field.synthesize(grad);

    bool accepted = false;
    Grid trial;
    Evaluation next;
    for (int k = 0; k < kMaxHalvings; ++k) {
      trial = d - step * direction;
      next = evaluate(sp, trial, false);
      if (next.objective <= cur.objective - kArmijo * step * gnorm2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (tighten()) continue;
      break;
    }

    for (std::size_t j = 0; j < grad.size(); ++j) field.coeffs()[j] -= step * grad[j];
    d = std::move(trial);
    cur = evaluate(sp, d, true);
    grad = field.pullback(cur.gradient);
    trace.records.push_back({iteration++, scale, cur.objective, cur.fidelity, cur.smoothness, step});
    history.push_back(cur.objective);
    step *= 2.0;

    if (history.size() > kWindow) {
      const double before = history[history.size() - 1 - kWindow];
      if (before <= 0 || (before - cur.objective) / before < options.tol) {
        if (tighten()) continue;
        break;
      }
    }
  }
  return d;
}

ScaleProblem make_scale(const SuperResProblem& problem, const DepthMap& target, int k) {
  ScaleProblem sp;
  sp.op = Resampler{problem.resampler.model, k};
  sp.target = target;
  sp.target.mask.setConstant(true);
  sp.target_mask = problem.low_res.mask;
  sp.fidelity = problem.fidelity;
  sp.weights = problem.weights;
  sp.levels = pyramid::max_levels(target.height(), target.width(), problem.pyramid_levels);
  sp.rig = problem.rig;
  sp.lambda = problem.smoothness_lambda;
  sp.pitch = target.pixel_pitch / k;
  const Eigen::Index h = target.height() * k, w = target.width() * k;
  std::optional<Grid> guide;
  if (problem.guide) {
    const int shrink = problem.factor() / k;
    guide = shrink > 1 ? downsample<double>(*problem.guide, DownsampleModel::Box, shrink) : *problem.guide;
  }
  std::tie(sp.wx, sp.wy) = smoothness_weights(guide, h, w);
  return sp;
}

}  // namespace

std::string to_string(Fidelity fidelity) {
  return fidelity == Fidelity::DepthMSE ? "depth_mse" : "visual";
}

Fidelity fidelity_from_string(const std::string& name) {
  if (name == "depth_mse" || name == "DepthMSE") return Fidelity::DepthMSE;
  if (name == "visual" || name == "VisualCombined") return Fidelity::VisualCombined;
  throw Error(ErrorCode::InvalidArgument, "unknown fidelity '" + name + "'");
}

InitMethod init_method_from_string(const std::string& name) {
  if (name == "bicubic") return InitMethod::Bicubic;
  if (name == "nearest") return InitMethod::NearestUp;
  throw Error(ErrorCode::InvalidArgument, "unknown init '" + name + "'");
}

double default_smoothness(Fidelity fidelity) { return fidelity == Fidelity::VisualCombined ? 100.0 : 0.016; }

void SuperResProblem::validate() const {
  resampler.validate();
  weights.validate();
  rig.validate();
  require(smoothness_lambda >= 0 && std::isfinite(smoothness_lambda), ErrorCode::InvalidArgument,
          "smoothness weight must be nonnegative");
  require(pyramid_levels >= 1, ErrorCode::InvalidArgument, "pyramid needs at least one level");
  require(low_res.width() >= 1 && low_res.height() >= 1, ErrorCode::InvalidArgument, "empty low-resolution input");
  require(low_res.mask.rows() == low_res.height() && low_res.mask.cols() == low_res.width(),
          ErrorCode::DimensionMismatch, "low-resolution mask size mismatch");
  require(low_res.valid_count() > 0, ErrorCode::EmptyIntersection, "low-resolution input has no valid pixels");
  if (guide) {
    require(guide->rows() == low_res.height() * factor() && guide->cols() == low_res.width() * factor(),
            ErrorCode::DimensionMismatch, "guide must have the output dimensions");
  }
  if (fidelity == Fidelity::VisualCombined) {
    require(low_res.width() >= 2 && low_res.height() >= 2, ErrorCode::InvalidArgument,
            "visual fidelity needs at least 2x2 low-resolution pixels");
  }
}

SolveResult solve(const SuperResProblem& problem, const SolveOptions& options) {
  problem.validate();
  require(options.budget >= 1, ErrorCode::InvalidArgument, "iteration budget must be >= 1");
  require(options.tol >= 0, ErrorCode::InvalidArgument, "tolerance must be nonnegative");

  SolveResult result;
  DepthMap target = problem.low_res;
  result.trace.holes_filled = fill_nearest_valid(target);

  int iteration = 0;
  DepthMap current;
  int previous_scale = 0;
  for (int k : schedule(problem.factor())) {
    ScaleProblem sp = make_scale(problem, target, k);
    DepthMap init;
    if (previous_scale == 0) {
      init = options.init == InitMethod::Bicubic ? upsample_bicubic(target, k) : upsample_nearest(target, k);
    } else {
      init = upsample_bicubic(current, k / previous_scale);
    }
    init.mask.setConstant(true);

    if (sp.fidelity == Fidelity::VisualCombined && problem.auto_weight) {
      const Grid low = downsample<double>(init.values, sp.op.model, k);
      try {
        sp.weights.w = auto_weight(sp.low_map(low), sp.target, sp.levels, sp.rig).w;
      } catch (const Error&) {
        // Degenerate at the start (e.g. already consistent): keep the given weight.
      }
    }
    result.trace.visual_weight = sp.weights.w;

    init.values = descend(sp, std::move(init.values), options, k, result.trace, iteration);
    current = std::move(init);
    previous_scale = k;
  }
  result.depth = std::move(current);
  return result;
}

double fidelity_value(const SuperResProblem& problem, const DepthMap& high_res, double visual_weight) {
  DepthMap target = problem.low_res;
  fill_nearest_valid(target);
  ScaleProblem sp = make_scale(problem, target, problem.factor());
  sp.weights.w = visual_weight;
  const Grid low = downsample<double>(high_res.values, sp.op.model, sp.op.factor);
  return fidelity_terms(sp, low, nullptr);
}

std::string SolveTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,scale,objective,fidelity,smoothness,step\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << r.scale << ',' << r.objective << ',' << r.fidelity << ',' << r.smoothness << ','
        << r.step << '\n';
  }
  return out.str();
}

void SolveTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Unwritable, "cannot write " + path.string());
  out << to_csv();
  if (!out) throw Error(ErrorCode::Unwritable, "write failed for " + path.string());
}

DepthMap add_multiplicative_noise(const DepthMap& map, double sigma, std::uint64_t seed) {
  require(sigma >= 0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "noise sigma must be nonnegative");
  DepthMap out = map;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (Eigen::Index y = 0; y < map.height(); ++y) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      if (map.valid(y, x)) out.values(y, x) = map.values(y, x) * (1.0 + gauss(rng));
    }
  }
  return out;
}

}  // namespace depthvis
