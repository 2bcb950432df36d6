#include "depthvis/loss.hpp"

#include <cmath>

#include "depthvis/metrics.hpp"
#include "depthvis/pyramid.hpp"

namespace depthvis {

namespace {

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

void check_levels(Eigen::Index h, Eigen::Index w, int levels) {
  require(levels >= 1, ErrorCode::InvalidArgument, "pyramid needs at least one level");
  const Eigen::Index step = Eigen::Index{1} << (levels - 1);
  require(h % step == 0 && w % step == 0, ErrorCode::DimensionMismatch,
          "dimensions must be divisible by 2^(levels-1) = " + std::to_string(step));
}

}  // namespace

void LossWeights::validate() const {
  require(std::isfinite(w) && w >= 0 && std::isfinite(w_I) && w_I >= 0, ErrorCode::InvalidArgument,
          "loss weights must be finite and nonnegative");
}

LossValueGrad lap1(const Grid& a, const Grid& b, int levels, double huber) {
  require(huber >= 0, ErrorCode::InvalidArgument, "huber threshold must be nonnegative");
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::DimensionMismatch, "lap1 inputs differ in size");
  check_levels(a.rows(), a.cols(), levels);
  // The pyramid is linear, so bands of the difference are band differences.
  const auto bands = pyramid::laplacian_bands<double>(a - b, levels);
  LossValueGrad out;
  std::vector<Grid> cotangents;
  cotangents.reserve(bands.size());
  for (std::size_t j = 0; j < bands.size(); ++j) {
    const double weight = std::ldexp(1.0, 2 * static_cast<int>(j)) / static_cast<double>(bands[j].size());
    out.value += weight * bands[j].abs().sum();
    cotangents.push_back(weight * bands[j].unaryExpr([huber](double v) {
      return std::abs(v) < huber ? v / huber : sign(v);
    }));
  }
  out.gradient = pyramid::laplacian_bands_adjoint(cotangents);
  return out;
}

LossValueGrad lap1(const DepthMap& d1, const DepthMap& d2, int levels, double huber) {
  require(same_dims(d1, d2), ErrorCode::DimensionMismatch, "lap1 inputs differ in size");
  require(d1.mask.all() && d2.mask.all(), ErrorCode::InvalidValue, "lap1 needs fully valid maps; fill holes first");
  return lap1(d1.values, d2.values, levels, huber);
}

LossValueGrad mse_v_grad(const DepthMap& d1, const DepthMap& d2, const LightRig& rig, NormalModel model) {
  require(model == NormalModel::HeightField, ErrorCode::InvalidArgument,
          "mse_v gradients are available for the height-field model only");
  require(same_dims(d1, d2), ErrorCode::DimensionMismatch, "mse_v inputs differ in size");
  require(d1.kind == DepthKind::OrthogonalDepth || (d1.kind == DepthKind::PerspectiveDepth && !d1.intrinsics),
          ErrorCode::InvalidArgument, "mse_v gradients treat the first map as a height field");
  rig.validate();
  const NormalMap n1 = normals_from_depth(d1, model);
  const NormalMap n2 = normals_from_depth(d2, model);
  const Mask joint = n1.mask && n2.mask;
  const auto count = static_cast<double>(joint.count());
  require(count > 0, ErrorCode::EmptyIntersection, "mse_v: no jointly valid normals");

  // Orthonormal basis: sum_m (e_m . dn)^2 = |dn|^2.
  const Eigen::Index h = d1.height(), w = d1.width();
  const double pitch = d1.pixel_pitch;
  LossValueGrad out;
  out.gradient = Grid::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index y_lo = y + 1 < h ? y : y - 1;
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!joint(y, x)) continue;
      const Eigen::Index x_lo = x + 1 < w ? x : x - 1;
      const Vec3 n = n1.at(y, x);
      const Vec3 diff = n - n2.at(y, x);
      out.value += diff.squaredNorm();

      // n = u / |u|, u = (-gx, -gy, 1); dL/du = (I - n n^T) dL/dn / |u|.
      const Vec3 dl_dn = 2.0 / (3.0 * count) * diff;
      const double inv_len = n.z();  // 1 / |u|
      const Vec3 dl_du = (dl_dn - n * n.dot(dl_dn)) * inv_len;
      const double dl_dgx = -dl_du.x() / pitch;
      const double dl_dgy = -dl_du.y() / pitch;
      out.gradient(y, x_lo + 1) += dl_dgx;
      out.gradient(y, x_lo) -= dl_dgx;
      out.gradient(y_lo + 1, x) += dl_dgy;
      out.gradient(y_lo, x) -= dl_dgy;
    }
  }
  out.value /= 3.0 * count;
  return out;
}

LossValueGrad combined_loss(const DepthMap& d1, const DepthMap& d2, const LossWeights& weights, int levels,
                            const LightRig& rig, NormalModel model, double huber) {
  weights.validate();
  LossValueGrad out = lap1(d1, d2, levels, huber);
  if (weights.w == 0.0) return out;
  const LossValueGrad visual = mse_v_grad(d1, d2, rig, model);
  out.value += weights.w * visual.value;
  out.gradient += weights.w * visual.gradient;
  return out;
}

LossWeights auto_weight(const DepthMap& d1_init, const DepthMap& d2, int levels, const LightRig& rig,
                        NormalModel model, const std::optional<std::pair<Grid, Grid>>& guide_pair) {
  const double depth_term = lap1(d1_init, d2, levels).value;
  const double visual_term = mse_v(d1_init, d2, rig, model);
  if (!(depth_term > 0) || !(visual_term > 0)) {
    throw Error(ErrorCode::DegenerateInput,
                "auto_weight: a loss term is zero at the initial iterate; set the weight manually");
  }
  LossWeights weights;
  weights.w = depth_term / visual_term;
  weights.w_I = 0.0;
  if (guide_pair) {
    const double guide_term = lap1(guide_pair->first, guide_pair->second, levels).value;
    if (!(guide_term > 0)) {
      throw Error(ErrorCode::DegenerateInput, "auto_weight: guidance term is zero; set w_I manually");
    }
    weights.w_I = depth_term / guide_term;
  }
  return weights;
}

}  // namespace depthvis
