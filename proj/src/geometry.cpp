#include "depthvis/geometry.hpp"

#include <cmath>

namespace depthvis {

namespace {

double ray_scale(const CameraIntrinsics& k, Eigen::Index y, Eigen::Index x) {
  const double u = (static_cast<double>(x) - k.principal_x) / k.focal_x;
  const double v = (static_cast<double>(y) - k.principal_y) / k.focal_y;
  return std::sqrt(1.0 + u * u + v * v);
}

double to_orthogonal(double value, DepthKind from, const CameraIntrinsics& k, Eigen::Index y, Eigen::Index x) {
  switch (from) {
    case DepthKind::OrthogonalDepth: return value;
    case DepthKind::PerspectiveDepth: return value / ray_scale(k, y, x);
    case DepthKind::Disparity: return k.focal_x * k.baseline / value;
  }
  return value;
}

double from_orthogonal(double z, DepthKind to, const CameraIntrinsics& k, Eigen::Index y, Eigen::Index x) {
  switch (to) {
    case DepthKind::OrthogonalDepth: return z;
    case DepthKind::PerspectiveDepth: return z * ray_scale(k, y, x);
    case DepthKind::Disparity: return k.focal_x * k.baseline / z;
  }
  return z;
}

// A normal is valid only if every pixel of its clipped 3x3 neighborhood is.
Mask dilate_invalid(const Mask& mask) {
  const Eigen::Index h = mask.rows(), w = mask.cols();
  Mask out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      bool ok = true;
      for (Eigen::Index yy = std::max<Eigen::Index>(0, y - 1); ok && yy <= std::min(h - 1, y + 1); ++yy) {
        for (Eigen::Index xx = std::max<Eigen::Index>(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
          if (!mask(yy, xx)) {
            ok = false;
            break;
          }
        }
      }
      out(y, x) = ok;
    }
  }
  return out;
}

// Forward difference with a backward fallback on the last sample.
struct Stencil {
  Eigen::Index lo, hi;
};

Stencil stencil(Eigen::Index i, Eigen::Index n) { return i + 1 < n ? Stencil{i, i + 1} : Stencil{i - 1, i}; }

}  // namespace

LightRig LightRig::rotated(const Eigen::Matrix3d& rotation) {
  LightRig rig;
  for (int m = 0; m < 3; ++m) rig.basis[m] = rotation.col(m);
  return rig;
}

void LightRig::validate() const {
  for (int m = 0; m < 3; ++m) {
    require(std::abs(basis[m].norm() - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "rig basis vector is not unit");
    for (int k = m + 1; k < 3; ++k) {
      require(std::abs(basis[m].dot(basis[k])) <= 1e-12, ErrorCode::InvalidArgument, "rig basis is not orthogonal");
    }
  }
  require(std::abs(extra.norm() - 1.0) <= 1e-9, ErrorCode::InvalidArgument, "extra light is not unit");
}

DepthMap convert_kind(const DepthMap& map, DepthKind target) {
  if (map.kind == target) return map;
  require(map.intrinsics.has_value(), ErrorCode::MissingIntrinsics, "depth kind conversion needs camera intrinsics");
  const CameraIntrinsics& k = *map.intrinsics;
  k.validate();
  DepthMap out = map;
  out.kind = target;
  for (Eigen::Index y = 0; y < map.height(); ++y) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      if (!map.valid(y, x)) continue;
      const double v = map.values(y, x);
      require(std::isfinite(v) && v > 0, ErrorCode::InvalidValue, "conversion needs positive finite values");
      out.values(y, x) = from_orthogonal(to_orthogonal(v, map.kind, k, y, x), target, k, y, x);
    }
  }
  return out;
}

NormalMap normals_from_depth(const DepthMap& map, NormalModel model) {
  const Eigen::Index h = map.height(), w = map.width();
  require(h >= 2 && w >= 2, ErrorCode::DegenerateInput, "normals need at least 2 pixels per axis");
  require(map.mask.rows() == h && map.mask.cols() == w, ErrorCode::DimensionMismatch, "mask size mismatch");

  NormalMap n;
  n.nx = Grid::Zero(h, w);
  n.ny = Grid::Zero(h, w);
  n.nz = Grid::Zero(h, w);
  n.mask = dilate_invalid(map.mask);

  if (model == NormalModel::HeightField) {
    const double pitch = map.pixel_pitch;
    require(pitch > 0, ErrorCode::InvalidArgument, "pixel pitch must be positive");
    // Disparity and range are converted to orthogonal depth when intrinsics
    // allow it; disparity without intrinsics has no height-field meaning.
    const bool convert = map.kind == DepthKind::Disparity ||
                         (map.kind == DepthKind::PerspectiveDepth && map.intrinsics.has_value());
    const DepthMap ortho = convert ? convert_kind(map, DepthKind::OrthogonalDepth) : map;
    for (Eigen::Index y = 0; y < h; ++y) {
      const Stencil sy = stencil(y, h);
      for (Eigen::Index x = 0; x < w; ++x) {
        if (!n.mask(y, x)) continue;
        const Stencil sx = stencil(x, w);
        const double gx = (ortho.values(y, sx.hi) - ortho.values(y, sx.lo)) / pitch;
        const double gy = (ortho.values(sy.hi, x) - ortho.values(sy.lo, x)) / pitch;
        const double len = std::sqrt(gx * gx + gy * gy + 1.0);
        n.nx(y, x) = -gx / len;
        n.ny(y, x) = -gy / len;
        n.nz(y, x) = 1.0 / len;
      }
    }
    return n;
  }

  require(map.intrinsics.has_value(), ErrorCode::MissingIntrinsics, "perspective normals need camera intrinsics");
  const DepthMap ortho = convert_kind(map, DepthKind::OrthogonalDepth);
  const CameraIntrinsics& k = *map.intrinsics;
  auto point = [&](Eigen::Index y, Eigen::Index x) {
    const double z = ortho.values(y, x);
    return Vec3(z * (static_cast<double>(x) - k.principal_x) / k.focal_x,
                z * (static_cast<double>(y) - k.principal_y) / k.focal_y, z);
  };
  for (Eigen::Index y = 0; y < h; ++y) {
    const Stencil sy = stencil(y, h);
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!n.mask(y, x)) continue;
      const Stencil sx = stencil(x, w);
      const Vec3 tx = point(y, sx.hi) - point(y, sx.lo);
      const Vec3 ty = point(sy.hi, x) - point(sy.lo, x);
      const Vec3 c = tx.cross(ty);
      const double len = c.norm();
      if (!(len > 1e-300) || !std::isfinite(len)) {
        n.mask(y, x) = false;
        continue;
      }
      n.nx(y, x) = c.x() / len;
      n.ny(y, x) = c.y() / len;
      n.nz(y, x) = c.z() / len;
    }
  }
  return n;
}

Rendering render(const NormalMap& normals, const Vec3& light) {
  require(std::abs(light.norm() - 1.0) <= 1e-9, ErrorCode::InvalidArgument, "light direction must be a unit vector");
  Rendering r;
  r.mask = normals.mask;
  r.values = (normals.nx * light.x() + normals.ny * light.y() + normals.nz * light.z()) * normals.mask.cast<double>();
  return r;
}

std::array<Rendering, 3> basis_renderings(const DepthMap& map, const LightRig& rig, NormalModel model) {
  rig.validate();
  const NormalMap n = normals_from_depth(map, model);
  return {render(n, rig.basis[0]), render(n, rig.basis[1]), render(n, rig.basis[2])};
}

}  // namespace depthvis
