#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>

#include "depthvis/error.hpp"

namespace depthvis {

/// Row-major 2D field; rows index y, columns index x.
template <typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Grid = GridT<double>;
using Mask = GridT<bool>;
using Vec3 = Eigen::Vector3d;

enum class DepthKind { Disparity, OrthogonalDepth, PerspectiveDepth };

std::string to_string(DepthKind kind);
DepthKind depth_kind_from_string(const std::string& name);

struct CameraIntrinsics {
  double focal_x = 1.0;
  double focal_y = 1.0;
  double principal_x = 0.0;
  double principal_y = 0.0;
  double baseline = 0.2;  // meters

  void validate() const;
};

/// A depth, disparity or range image with a validity mask.
///
/// `pixel_pitch` is the lateral spacing of samples (meters per pixel) used by
/// the height-field normal model; resampling scales it with the factor.
struct DepthMap {
  Grid values;
  Mask mask;
  DepthKind kind = DepthKind::OrthogonalDepth;
  std::optional<CameraIntrinsics> intrinsics;
  double pixel_pitch = 1.0;

  DepthMap() = default;
  explicit DepthMap(Grid v, DepthKind k = DepthKind::OrthogonalDepth);
  DepthMap(Grid v, Mask m, DepthKind k = DepthKind::OrthogonalDepth);

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
  bool valid(Eigen::Index y, Eigen::Index x) const { return mask(y, x); }
  std::size_t valid_count() const { return static_cast<std::size_t>(mask.count()); }

  /// Throws if dimensions disagree, valid values are non-finite, or a
  /// depth-kind value is not positive.
  void validate() const;

  /// Copy with identical metadata but new values (mask kept).
  DepthMap with_values(Grid v) const;
};

bool same_dims(const DepthMap& a, const DepthMap& b);

}  // namespace depthvis
