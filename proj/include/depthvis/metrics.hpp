#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "depthvis/geometry.hpp"
#include "depthvis/types.hpp"

namespace depthvis {

// ---------------------------------------------------------------------------
// Depth-space metrics

/// RMS depth deviation over jointly valid pixels, optionally capped.
double rmse_d(const DepthMap& d1, const DepthMap& d2, std::optional<double> cap = std::nullopt);

enum class BadPixMode { Absolute, Relative };

struct BadPixResult {
  double fraction = 0.0;
  /// Relative mode only: jointly valid pixels skipped for a zero reference.
  std::size_t excluded = 0;
};

/// Fraction of jointly valid pixels with |d1 - d2| > tau (Absolute, meters or
/// the map's units) or |d1 - d2| / |d2| > tau / 100 (Relative, tau in percent).
BadPixResult badpix_d(const DepthMap& d1, const DepthMap& d2, double tau, BadPixMode mode);

/// Mean of min(0.05, |H(h)|_F) * 100 over interior pixels, where h is the
/// disparity difference and H its central-difference Hessian. Maps that are
/// not disparity are converted using `intrinsics` (or their own).
double bumpiness_d(const DepthMap& d1, const DepthMap& d2,
                   const std::optional<CameraIntrinsics>& intrinsics = std::nullopt);

// ---------------------------------------------------------------------------
// Rendering-space metrics

/// (1 / 3N) sum over basis lights and jointly valid pixels of the squared
/// rendering difference. Equals the mean squared normal difference / 3.
double mse_v(const DepthMap& d1, const DepthMap& d2, const LightRig& rig = LightRig::canonical(),
             NormalModel model = NormalModel::HeightField);

inline double rmse_v(const DepthMap& d1, const DepthMap& d2, const LightRig& rig = LightRig::canonical(),
                     NormalModel model = NormalModel::HeightField) {
  return std::sqrt(mse_v(d1, d2, rig, model));
}

/// RMS rendering difference under one light direction.
double rmse_v1(const DepthMap& d1, const DepthMap& d2, const Vec3& light,
               NormalModel model = NormalModel::HeightField);

/// RMS difference of two renderings over their joint mask.
double rendering_rmse(const Rendering& r1, const Rendering& r2);

struct SsimParams {
  int window = 7;
  double c1 = 0.02 * 0.02;  // (0.01 * dynamic range 2)^2
  double c2 = 0.06 * 0.06;  // (0.03 * dynamic range 2)^2
};

struct SsimWindowStats {
  double mu1 = 0, mu2 = 0;
  double sigma1 = 0, sigma2 = 0;
  double sigma12 = 0;

  double luminance(double c1) const { return (2 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1); }
  double contrast(double c2) const {
    return (2 * sigma1 * sigma2 + c2) / (sigma1 * sigma1 + sigma2 * sigma2 + c2);
  }
  double structure(double c2) const { return (sigma12 + c2 / 2) / (sigma1 * sigma2 + c2 / 2); }
};

/// Mean of l * c * s over every pixel whose full window lies inside the image
/// and is jointly valid. Window statistics are population moments.
double ssim_v(const Rendering& r1, const Rendering& r2, const SsimParams& params = {});
inline double dssim_v(const Rendering& r1, const Rendering& r2, const SsimParams& params = {}) {
  return 1.0 - ssim_v(r1, r2, params);
}

/// Fraction of jointly valid pixels whose renderings, mapped to [0, 1], differ
/// by more than tau_shades / 255.
double badpix_v(const Rendering& r1, const Rendering& r2, int tau_shades);

// ---------------------------------------------------------------------------
// Light reductions

enum class LightLabel { E1, E2, E3, E4, Max, Avg, NotApplicable };

std::string to_string(LightLabel label);
inline constexpr std::array<LightLabel, 6> kLightLabels{LightLabel::E1, LightLabel::E2, LightLabel::E3,
                                                        LightLabel::E4, LightLabel::Max, LightLabel::Avg};

/// Values under the four evaluation lights plus their worst (max) and mean.
struct LightReduction {
  std::array<double, 4> per_light{};
  double max = 0.0;
  double avg = 0.0;

  double at(LightLabel label) const;
};

enum class RenderingMetric { Dssim, BadPix, Rmse };

struct RenderingMetricSpec {
  RenderingMetric metric = RenderingMetric::Dssim;
  int tau_shades = 5;  // BadPix only
  SsimParams ssim;     // Dssim only
};

double evaluate(const RenderingMetricSpec& spec, const Rendering& r1, const Rendering& r2);

LightReduction reduce_over_lights(const RenderingMetricSpec& spec, const DepthMap& d1, const DepthMap& d2,
                                  const LightRig& rig = LightRig::canonical(),
                                  NormalModel model = NormalModel::HeightField);

// ---------------------------------------------------------------------------
// Correlation

double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Ranks starting at 1, ties receive the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

// ---------------------------------------------------------------------------

struct MetricReport {
  std::string scene_id;
  std::string method_id;
  std::map<std::pair<std::string, LightLabel>, double> entries;

  void set(const std::string& metric, LightLabel label, double value) { entries[{metric, label}] = value; }
  void set(const std::string& metric, const LightReduction& r);
  std::optional<double> get(const std::string& metric, LightLabel label = LightLabel::NotApplicable) const;
};

}  // namespace depthvis
