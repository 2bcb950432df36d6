#include "depthvis/resample.hpp"

#include <array>
#include <deque>

namespace depthvis {

std::string to_string(DownsampleModel model) {
  return model == DownsampleModel::Box ? "box" : "nearest";
}

DownsampleModel downsample_model_from_string(const std::string& name) {
  if (name == "box" || name == "Box") return DownsampleModel::Box;
  if (name == "nearest" || name == "Nearest") return DownsampleModel::Nearest;
  throw Error(ErrorCode::InvalidArgument, "unknown downsampling model '" + name + "'");
}

DepthMap downsample(const Resampler& r, const DepthMap& map) {
  r.validate();
  r.check_divides(map.height(), map.width());
  const int f = r.factor;
  const Eigen::Index h = map.height() / f, w = map.width() / f;
  DepthMap out = map;
  out.values = Grid::Zero(h, w);
  out.mask = Mask::Constant(h, w, false);
  out.pixel_pitch = map.pixel_pitch * f;
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (r.model == DownsampleModel::Nearest) {
        out.values(y, x) = map.values(y * f, x * f);
        out.mask(y, x) = map.mask(y * f, x * f);
        continue;
      }
      double sum = 0.0;
      int count = 0;
      for (int dy = 0; dy < f; ++dy) {
        for (int dx = 0; dx < f; ++dx) {
          if (map.mask(y * f + dy, x * f + dx)) {
            sum += map.values(y * f + dy, x * f + dx);
            ++count;
          }
        }
      }
      if (count > 0) {
        out.values(y, x) = sum / count;
        out.mask(y, x) = true;
      }
    }
  }
  // Intrinsics describe the full-resolution camera; scale them along.
  if (out.intrinsics) {
    auto& k = *out.intrinsics;
    k.focal_x /= f;
    k.focal_y /= f;
    k.principal_x = (k.principal_x + 0.5) / f - 0.5;
    k.principal_y = (k.principal_y + 0.5) / f - 0.5;
  }
  return out;
}

DepthMap downsample_adjoint(const Resampler& r, const DepthMap& low, Eigen::Index out_height,
                            Eigen::Index out_width) {
  r.validate();
  require(out_height == low.height() * r.factor && out_width == low.width() * r.factor,
          ErrorCode::DimensionMismatch, "adjoint output dimensions must be the low-res dimensions times the factor");
  Grid masked = low.values * low.mask.cast<double>();
  DepthMap out = low;
  out.values = downsample_adjoint(masked, r.model, r.factor);
  out.mask = Mask::Constant(out_height, out_width, true);
  out.pixel_pitch = low.pixel_pitch / r.factor;
  return out;
}

Grid upsample_bicubic(const Grid& low, int factor) {
  require(factor >= 1, ErrorCode::InvalidArgument, "upsampling factor must be positive");
  const Eigen::Index h = low.rows(), w = low.cols();
  const Eigen::Index H = h * factor, W = w * factor;

  // Separable: rows first into a (h x W) buffer, then columns.
  struct Taps {
    std::array<Eigen::Index, 4> idx;
    std::array<double, 4> wt;
  };
  auto taps_for = [factor](Eigen::Index out, Eigen::Index n) {
    const double src = (static_cast<double>(out) + 0.5) / factor - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    Taps taps;
    for (int k = 0; k < 4; ++k) {
      const auto i = static_cast<Eigen::Index>(base) - 1 + k;
      taps.idx[k] = std::clamp<Eigen::Index>(i, 0, n - 1);
      taps.wt[k] = catmull_rom(t - (k - 1));
    }
    return taps;
  };

  Grid rows(h, W);
  for (Eigen::Index x = 0; x < W; ++x) {
    const Taps t = taps_for(x, w);
    for (Eigen::Index y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.wt[k] * low(y, t.idx[k]);
      rows(y, x) = acc;
    }
  }
  Grid out(H, W);
  for (Eigen::Index y = 0; y < H; ++y) {
    const Taps t = taps_for(y, h);
    for (Eigen::Index x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.wt[k] * rows(t.idx[k], x);
      out(y, x) = acc;
    }
  }
  return out;
}

DepthMap upsample_bicubic(const DepthMap& map, int factor) {
  require(factor >= 1, ErrorCode::InvalidArgument, "upsampling factor must be positive");
  DepthMap filled = map;
  const bool holes = fill_nearest_valid(filled) > 0;
  DepthMap out = upsample_nearest(map, factor);
  out.values = upsample_bicubic(filled.values, factor);
  if (!holes) out.mask.setConstant(true);
  return out;
}

DepthMap upsample_nearest(const DepthMap& map, int factor) {
  require(factor >= 1, ErrorCode::InvalidArgument, "upsampling factor must be positive");
  const Eigen::Index H = map.height() * factor, W = map.width() * factor;
  DepthMap out = map;
  out.values.resize(H, W);
  out.mask.resize(H, W);
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      out.values(y, x) = map.values(y / factor, x / factor);
      out.mask(y, x) = map.mask(y / factor, x / factor);
    }
  }
  out.pixel_pitch = map.pixel_pitch / factor;
  if (out.intrinsics) {
    auto& k = *out.intrinsics;
    k.focal_x *= factor;
    k.focal_y *= factor;
    k.principal_x = (k.principal_x + 0.5) * factor - 0.5;
    k.principal_y = (k.principal_y + 0.5) * factor - 0.5;
  }
  return out;
}

std::size_t fill_nearest_valid(DepthMap& map) {
  const Eigen::Index h = map.height(), w = map.width();
  const std::size_t holes = static_cast<std::size_t>(h * w) - map.valid_count();
  if (holes == 0) return 0;
  require(map.valid_count() > 0, ErrorCode::EmptyIntersection, "cannot fill a map with no valid pixels");

  GridT<Eigen::Index> source = GridT<Eigen::Index>::Constant(h, w, -1);
  std::deque<Eigen::Index> queue;
  for (Eigen::Index i = 0; i < h * w; ++i) {
    if (map.mask(i / w, i % w)) {
      source(i / w, i % w) = i;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const Eigen::Index i = queue.front();
    queue.pop_front();
    const Eigen::Index y = i / w, x = i % w;
    const std::array<std::pair<Eigen::Index, Eigen::Index>, 4> nbrs{{{y - 1, x}, {y, x - 1}, {y, x + 1}, {y + 1, x}}};
    for (auto [ny, nx] : nbrs) {
      if (ny < 0 || nx < 0 || ny >= h || nx >= w || source(ny, nx) >= 0) continue;
      source(ny, nx) = source(y, x);
      queue.push_back(ny * w + nx);
    }
  }
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!map.mask(y, x)) {
        const Eigen::Index s = source(y, x);
        map.values(y, x) = map.values(s / w, s % w);
      }
    }
  }
  return holes;
}

}  // namespace depthvis
