#include "depthvis/types.hpp"

#include <cmath>

namespace depthvis {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unreadable: return "unreadable";
    case ErrorCode::Unwritable: return "unwritable";
    case ErrorCode::MalformedHeader: return "malformed header";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::RangeOverflow: return "range overflow";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::MissingIntrinsics: return "missing intrinsics";
    case ErrorCode::InvalidValue: return "invalid value";
    case ErrorCode::EmptyIntersection: return "empty valid intersection";
    case ErrorCode::DegenerateInput: return "degenerate input";
    case ErrorCode::Diverged: return "diverged";
  }
  return "unknown";
}

std::string to_string(DepthKind kind) {
  switch (kind) {
    case DepthKind::Disparity: return "disparity";
    case DepthKind::OrthogonalDepth: return "orthogonal";
    case DepthKind::PerspectiveDepth: return "perspective";
  }
  return "unknown";
}

DepthKind depth_kind_from_string(const std::string& name) {
  if (name == "disparity") return DepthKind::Disparity;
  if (name == "orthogonal") return DepthKind::OrthogonalDepth;
  if (name == "perspective") return DepthKind::PerspectiveDepth;
  throw Error(ErrorCode::InvalidArgument, "unknown depth kind '" + name + "'");
}

void CameraIntrinsics::validate() const {
  require(focal_x > 0 && focal_y > 0, ErrorCode::InvalidArgument, "focal lengths must be positive");
  require(baseline > 0, ErrorCode::InvalidArgument, "baseline must be positive");
}

DepthMap::DepthMap(Grid v, DepthKind k)
    : values(std::move(v)), mask(Mask::Constant(values.rows(), values.cols(), true)), kind(k) {}

DepthMap::DepthMap(Grid v, Mask m, DepthKind k) : values(std::move(v)), mask(std::move(m)), kind(k) {}

void DepthMap::validate() const {
  require(mask.rows() == values.rows() && mask.cols() == values.cols(), ErrorCode::DimensionMismatch,
          "mask dimensions differ from value grid");
  require(pixel_pitch > 0, ErrorCode::InvalidArgument, "pixel pitch must be positive");
  if (intrinsics) intrinsics->validate();
  for (Eigen::Index y = 0; y < height(); ++y) {
    for (Eigen::Index x = 0; x < width(); ++x) {
      if (!mask(y, x)) continue;
      const double v = values(y, x);
      require(std::isfinite(v), ErrorCode::InvalidValue, "non-finite value at a valid pixel");
      if (kind != DepthKind::Disparity) {
        require(v > 0, ErrorCode::InvalidValue, "depth values must be positive");
      }
    }
  }
}

DepthMap DepthMap::with_values(Grid v) const {
  DepthMap out = *this;
  out.values = std::move(v);
  return out;
}

bool same_dims(const DepthMap& a, const DepthMap& b) {
  return a.width() == b.width() && a.height() == b.height();
}

}  // namespace depthvis
