#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "depthvis/loss.hpp"
#include "depthvis/resample.hpp"

namespace depthvis {

enum class Fidelity { DepthMSE, VisualCombined };
enum class InitMethod { Bicubic, NearestUp };

std::string to_string(Fidelity fidelity);
Fidelity fidelity_from_string(const std::string& name);
InitMethod init_method_from_string(const std::string& name);

/// Single-image depth super-resolution problem:
///   min_d  fidelity(D d, low_res) + lambda * smoothness_guide(d)
struct SuperResProblem {
  DepthMap low_res;
  Resampler resampler;
  /// Optional high-resolution intensity image in [0, 1]; it only shapes the
  /// smoothness weights exp(-|grad I| / mean|grad I|).
  std::optional<Grid> guide;
  LossWeights weights;
  /// Choose the visual weight at each scale so Lap1 and w * MSE_v start equal.
  bool auto_weight = true;
  Fidelity fidelity = Fidelity::DepthMSE;
  double smoothness_lambda = 0.0;
  int pyramid_levels = kDefaultPyramidLevels;
  LightRig rig;

  int factor() const { return resampler.factor; }
  void validate() const;
};

/// Smoothness weight that works well on metric-scale scenes. The visual
/// fidelity is an L1 quantity in meters while DepthMSE is in square meters, so
/// their regularizers live on very different scales.
double default_smoothness(Fidelity fidelity);

struct SolveOptions {
  InitMethod init = InitMethod::Bicubic;
  int budget = 2000;  // iterations per scale
  double tol = 1e-6;  // relative objective decrease over a 10-iteration window
};

struct SolveRecord {
  int iteration = 0;
  int scale = 0;  // upsampling factor of the grid being optimized
  double objective = 0.0;
  double fidelity = 0.0;
  double smoothness = 0.0;
  double step = 0.0;
};

struct SolveTrace {
  std::vector<SolveRecord> records;
  std::size_t holes_filled = 0;
  double visual_weight = 0.0;  // weight used at the final scale

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct SolveResult {
  DepthMap depth;
  SolveTrace trace;
};

/// Coarse-to-fine gradient descent with Armijo backtracking. Each dyadic scale
/// is initialized by upsampling the previous solution. Within a scale the
/// objective never increases.
SolveResult solve(const SuperResProblem& problem, const SolveOptions& options = {});

/// Fidelity term of `solve` evaluated at a high-resolution map; `visual_weight`
/// is the trace's weight for the visual fidelity and ignored otherwise.
double fidelity_value(const SuperResProblem& problem, const DepthMap& high_res, double visual_weight);

/// Multiplies each valid value by (1 + g), g ~ N(0, sigma^2), deterministic in seed.
DepthMap add_multiplicative_noise(const DepthMap& map, double sigma, std::uint64_t seed);

}  // namespace depthvis
