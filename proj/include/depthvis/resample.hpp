#pragma once

#include <cmath>

#include "depthvis/types.hpp"

namespace depthvis {

enum class DownsampleModel { Box, Nearest };

std::string to_string(DownsampleModel model);
DownsampleModel downsample_model_from_string(const std::string& name);

/// Decimation operator D: block mean (Box) or top-left block sample (Nearest).
struct Resampler {
  DownsampleModel model = DownsampleModel::Box;
  int factor = 2;

  void validate() const {
    require(factor >= 2, ErrorCode::InvalidArgument, "resampling factor must be >= 2");
  }
  void check_divides(Eigen::Index height, Eigen::Index width) const {
    require(height % factor == 0 && width % factor == 0, ErrorCode::DimensionMismatch,
            "factor " + std::to_string(factor) + " does not divide " + std::to_string(width) + "x" +
                std::to_string(height));
  }
};

/// D applied to a fully valid grid.
template <typename Scalar>
GridT<Scalar> downsample(const GridT<Scalar>& high, DownsampleModel model, int factor) {
  const Eigen::Index h = high.rows() / factor, w = high.cols() / factor;
  GridT<Scalar> low(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (model == DownsampleModel::Nearest) {
        low(y, x) = high(y * factor, x * factor);
      } else {
        low(y, x) = high.block(y * factor, x * factor, factor, factor).sum() / Scalar(factor * factor);
      }
    }
  }
  return low;
}

/// D^T: Box spreads value / factor^2 over the block, Nearest writes the
/// block's top-left sample and leaves the rest zero.
template <typename Scalar>
GridT<Scalar> downsample_adjoint(const GridT<Scalar>& low, DownsampleModel model, int factor) {
  GridT<Scalar> high = GridT<Scalar>::Zero(low.rows() * factor, low.cols() * factor);
  for (Eigen::Index y = 0; y < low.rows(); ++y) {
    for (Eigen::Index x = 0; x < low.cols(); ++x) {
      if (model == DownsampleModel::Nearest) {
        high(y * factor, x * factor) = low(y, x);
      } else {
        high.block(y * factor, x * factor, factor, factor).setConstant(low(y, x) / Scalar(factor * factor));
      }
    }
  }
  return high;
}

/// Catmull-Rom cubic convolution kernel (a = -0.5).
inline double catmull_rom(double s) {
  constexpr double a = -0.5;
  s = std::abs(s);
  if (s <= 1.0) return ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0;
  if (s < 2.0) return ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a;
  return 0.0;
}

/// Mask-aware D. Box averages the valid pixels of each block; a block with no
/// valid pixel yields an invalid output. Nearest inherits the sample's validity.
DepthMap downsample(const Resampler& r, const DepthMap& map);

DepthMap downsample_adjoint(const Resampler& r, const DepthMap& low, Eigen::Index out_height, Eigen::Index out_width);

/// Catmull-Rom upsampling with half-pixel-center alignment and edge clamping.
Grid upsample_bicubic(const Grid& low, int factor);

/// Bicubic upsampling of a depth map. Holes are filled from the nearest valid
/// pixel for interpolation and stay invalid in the output.
DepthMap upsample_bicubic(const DepthMap& map, int factor);

/// Pixel replication.
DepthMap upsample_nearest(const DepthMap& map, int factor);

/// Replaces every invalid value by its nearest valid pixel (city-block BFS,
/// ties broken in scan order). Only values change; the mask keeps marking the
/// original holes. Returns the number of filled pixels.
std::size_t fill_nearest_valid(DepthMap& map);

}  // namespace depthvis
