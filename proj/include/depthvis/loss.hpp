#pragma once

#include <optional>
#include <utility>

#include "depthvis/geometry.hpp"
#include "depthvis/types.hpp"

namespace depthvis {

struct LossWeights {
  double w = 1.0;    // visual term
  double w_I = 0.0;  // photo guidance

  void validate() const;
};

struct LossValueGrad {
  double value = 0.0;
  Grid gradient;  // d value / d first argument
};

inline constexpr int kDefaultPyramidLevels = 4;

/// Level-weighted mean absolute deviation of Laplacian pyramids:
/// sum_j 4^j * mean|band_j(d1) - band_j(d2)|, j = 0 at the finest level.
/// Both maps must be fully valid and divisible by 2^(levels - 1).
///
/// With huber > 0 the returned gradient is that of the Huber-smoothed loss
/// (|v| replaced by a quadratic below `huber`); the value is always exact.
LossValueGrad lap1(const DepthMap& d1, const DepthMap& d2, int levels = kDefaultPyramidLevels, double huber = 0.0);

/// Grid-level Lap1 for non-depth fields (guide images).
LossValueGrad lap1(const Grid& a, const Grid& b, int levels = kDefaultPyramidLevels, double huber = 0.0);

/// MSE_v with its gradient with respect to d1 (height-field normals only).
LossValueGrad mse_v_grad(const DepthMap& d1, const DepthMap& d2, const LightRig& rig = LightRig::canonical(),
                         NormalModel model = NormalModel::HeightField);

/// Lap1 + w * MSE_v. `huber` smooths the Lap1 gradient as in lap1().
LossValueGrad combined_loss(const DepthMap& d1, const DepthMap& d2, const LossWeights& weights,
                            int levels = kDefaultPyramidLevels, const LightRig& rig = LightRig::canonical(),
                            NormalModel model = NormalModel::HeightField, double huber = 0.0);

/// Picks w so both terms have equal magnitude at the initial iterate. With a
/// guide pair (initial intensity, target intensity) w_I is set so the guidance
/// Lap1 matches the depth Lap1 the same way.
LossWeights auto_weight(const DepthMap& d1_init, const DepthMap& d2, int levels = kDefaultPyramidLevels,
                        const LightRig& rig = LightRig::canonical(), NormalModel model = NormalModel::HeightField,
                        const std::optional<std::pair<Grid, Grid>>& guide_pair = std::nullopt);

}  // namespace depthvis
