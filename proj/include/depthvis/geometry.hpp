#pragma once

#include <array>

#include <Eigen/Geometry>

#include "depthvis/types.hpp"

namespace depthvis {

enum class NormalModel { HeightField, Perspective };

/// Per-pixel unit normals; invalid pixels hold zero vectors.
struct NormalMap {
  GridT<double> nx, ny, nz;
  Mask mask;

  Eigen::Index width() const { return nx.cols(); }
  Eigen::Index height() const { return nx.rows(); }
  Vec3 at(Eigen::Index y, Eigen::Index x) const { return {nx(y, x), ny(y, x), nz(y, x)}; }
};

/// Diffuse shading e.n of a normal map, values in [-1, 1] on valid pixels.
struct Rendering {
  Grid values;
  Mask mask;

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
};

/// Three orthonormal basis light directions plus one extra evaluation light.
struct LightRig {
  std::array<Vec3, 3> basis{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  Vec3 extra = Vec3::Ones().normalized();

  static LightRig canonical() { return {}; }
  /// Rig with the basis rotated by `rotation`; the extra light is kept.
  static LightRig rotated(const Eigen::Matrix3d& rotation);

  /// The four evaluation lights e1, e2, e3, e4 in label order.
  std::array<Vec3, 4> lights() const { return {basis[0], basis[1], basis[2], extra}; }

  void validate() const;
};

DepthMap convert_kind(const DepthMap& map, DepthKind target);

NormalMap normals_from_depth(const DepthMap& map, NormalModel model = NormalModel::HeightField);

Rendering render(const NormalMap& normals, const Vec3& light);

std::array<Rendering, 3> basis_renderings(const DepthMap& map, const LightRig& rig,
                                          NormalModel model = NormalModel::HeightField);

}  // namespace depthvis
