#pragma once

#include <string>

#include "depthvis/types.hpp"

namespace depthvis {

enum class SceneKind { SphereOnPlane, CylinderOnPlane, Cube, Ramp, SineRelief };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

/// Shape parameters in meters; each kind reads the subset it needs.
struct SceneParams {
  double radius = 0.4;      // sphere, cylinder
  double sink = 0.0;        // sphere/cylinder axis depth behind the plane
  double length = 0.8;      // cylinder extent along y
  double height = 0.3;      // cube protrusion toward the camera
  double half_size = 0.35;  // cube half edge
  double bevel = 0.05;      // cube side ramp width
  double slope_x = 0.0;     // ramp
  double slope_y = 0.0;
  double amplitude = 0.05;  // sine relief
  double period = 0.2;
  double angle = 0.0;       // sine wave direction, radians from +x
};

/// Synthetic height-field scene. The background plane sits at `depth_range`
/// meters; pixel (x, y) covers (x * pixel_pitch, y * pixel_pitch) laterally and
/// the shape is centered at pixel (width / 2, height / 2). The map carries a
/// virtual camera with focal length depth_range / pixel_pitch.
struct SceneSpec {
  SceneKind kind = SceneKind::SphereOnPlane;
  int width = 128;
  int height = 128;
  double depth_range = 2.0;
  double pixel_pitch = 0.01;
  SceneParams params;

  void validate() const;
};

DepthMap generate(const SceneSpec& spec);

}  // namespace depthvis
