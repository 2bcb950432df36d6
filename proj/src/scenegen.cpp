#include "depthvis/scenegen.hpp"

#include <cmath>
#include <numbers>

namespace depthvis {

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::SphereOnPlane: return "sphere";
    case SceneKind::CylinderOnPlane: return "cylinder";
    case SceneKind::Cube: return "cube";
    case SceneKind::Ramp: return "ramp";
    case SceneKind::SineRelief: return "sine";
  }
  return "unknown";
}

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "sphere") return SceneKind::SphereOnPlane;
  if (name == "cylinder") return SceneKind::CylinderOnPlane;
  if (name == "cube") return SceneKind::Cube;
  if (name == "ramp") return SceneKind::Ramp;
  if (name == "sine") return SceneKind::SineRelief;
  throw Error(ErrorCode::InvalidArgument, "unknown scene kind '" + name + "'");
}

void SceneSpec::validate() const {
  require(width >= 32 && height >= 32, ErrorCode::InvalidArgument, "scene dimensions must be >= 32");
  require(depth_range > 0 && std::isfinite(depth_range), ErrorCode::InvalidArgument, "depth range must be positive");
  require(pixel_pitch > 0, ErrorCode::InvalidArgument, "pixel pitch must be positive");
  switch (kind) {
    case SceneKind::SphereOnPlane:
      require(params.radius > 0 && params.sink >= 0 && params.sink < params.radius, ErrorCode::InvalidArgument,
              "sphere radius must be positive and exceed the sink");
      break;
    case SceneKind::CylinderOnPlane:
      require(params.radius > 0 && params.length > 0 && params.sink >= 0 && params.sink < params.radius,
              ErrorCode::InvalidArgument, "cylinder radius and length must be positive, radius must exceed the sink");
      break;
    case SceneKind::Cube:
      require(params.half_size > 0 && params.bevel > 0 && params.height > 0, ErrorCode::InvalidArgument,
              "cube size, bevel and height must be positive");
      break;
    case SceneKind::Ramp: break;
    case SceneKind::SineRelief:
      require(params.period > 0, ErrorCode::InvalidArgument, "sine period must be positive");
      break;
  }
}

DepthMap generate(const SceneSpec& spec) {
  spec.validate();
  const SceneParams& p = spec.params;
  const double cx = (spec.width / 2) * spec.pixel_pitch;
  const double cy = (spec.height / 2) * spec.pixel_pitch;
  const double plane = spec.depth_range;

  auto depth_at = [&](double x, double y) {
    const double u = x - cx, v = y - cy;
    switch (spec.kind) {
      case SceneKind::SphereOnPlane: return plane - std::max(0.0, std::sqrt(std::max(0.0, p.radius * p.radius - u * u - v * v)) - p.sink);
      case SceneKind::CylinderOnPlane:
        if (std::abs(v) > p.length / 2) return plane;
        return plane - std::max(0.0, std::sqrt(std::max(0.0, p.radius * p.radius - u * u)) - p.sink);
      case SceneKind::Cube: {
        // Raised block with linear bevels, so the map stays continuous.
        const double inset = p.half_size - std::max(std::abs(u), std::abs(v));
        return plane - p.height * std::clamp(inset / p.bevel, 0.0, 1.0);
      }
      case SceneKind::Ramp: return plane + p.slope_x * u + p.slope_y * v;
      case SceneKind::SineRelief: {
        const double s = u * std::cos(p.angle) + v * std::sin(p.angle);
        return plane - p.amplitude * std::sin(2.0 * std::numbers::pi * s / p.period);
      }
    }
    return plane;
  };

  Grid values(spec.height, spec.width);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) values(y, x) = depth_at(x * spec.pixel_pitch, y * spec.pixel_pitch);
  }
  require((values > 0).all(), ErrorCode::InvalidArgument, "scene produces non-positive depth; raise depth_range");
  DepthMap map(std::move(values), DepthKind::OrthogonalDepth);
  map.pixel_pitch = spec.pixel_pitch;
  // Virtual camera whose footprint at the background plane matches the pitch;
  // used for disparity conversions (20 cm stereo baseline).
  CameraIntrinsics k;
  k.focal_x = k.focal_y = spec.depth_range / spec.pixel_pitch;
  k.principal_x = spec.width / 2;
  k.principal_y = spec.height / 2;
  k.baseline = 0.2;
  map.intrinsics = k;
  return map;
}

}  // namespace depthvis
