#include "depthvis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace depthvis {

namespace {

void check_pair(const DepthMap& d1, const DepthMap& d2) {
  require(same_dims(d1, d2), ErrorCode::DimensionMismatch, "compared maps differ in size");
}

void check_pair(const Rendering& r1, const Rendering& r2) {
  require(r1.width() == r2.width() && r1.height() == r2.height(), ErrorCode::DimensionMismatch,
          "compared renderings differ in size");
}

// Inclusive-exclusive summed-area table with one row/column of zero padding.
Grid integral(const Grid& g) {
  Grid s = Grid::Zero(g.rows() + 1, g.cols() + 1);
  for (Eigen::Index y = 0; y < g.rows(); ++y) {
    for (Eigen::Index x = 0; x < g.cols(); ++x) {
      s(y + 1, x + 1) = g(y, x) + s(y, x + 1) + s(y + 1, x) - s(y, x);
    }
  }
  return s;
}

double box_sum(const Grid& s, Eigen::Index y0, Eigen::Index x0, Eigen::Index n) {
  return s(y0 + n, x0 + n) - s(y0, x0 + n) - s(y0 + n, x0) + s(y0, x0);
}

}  // namespace

double rmse_d(const DepthMap& d1, const DepthMap& d2, std::optional<double> cap) {
  check_pair(d1, d2);
  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index y = 0; y < d1.height(); ++y) {
    for (Eigen::Index x = 0; x < d1.width(); ++x) {
      if (!d1.valid(y, x) || !d2.valid(y, x)) continue;
      const double e = d1.values(y, x) - d2.values(y, x);
      sum += e * e;
      ++n;
    }
  }
  require(n > 0, ErrorCode::EmptyIntersection, "rmse_d: no jointly valid pixels");
  const double value = std::sqrt(sum / static_cast<double>(n));
  return cap ? std::min(value, *cap) : value;
}

BadPixResult badpix_d(const DepthMap& d1, const DepthMap& d2, double tau, BadPixMode mode) {
  check_pair(d1, d2);
  require(tau >= 0, ErrorCode::InvalidArgument, "badpix threshold must be nonnegative");
  BadPixResult result;
  std::size_t bad = 0, n = 0;
  for (Eigen::Index y = 0; y < d1.height(); ++y) {
    for (Eigen::Index x = 0; x < d1.width(); ++x) {
      if (!d1.valid(y, x) || !d2.valid(y, x)) continue;
      const double diff = std::abs(d1.values(y, x) - d2.values(y, x));
      if (mode == BadPixMode::Relative) {
        const double ref = std::abs(d2.values(y, x));
        if (ref == 0.0) {
          ++result.excluded;
          continue;
        }
        if (diff / ref > tau / 100.0) ++bad;
      } else if (diff > tau) {
        ++bad;
      }
      ++n;
    }
  }
  require(n > 0, ErrorCode::EmptyIntersection, "badpix_d: no jointly valid pixels");
  result.fraction = static_cast<double>(bad) / static_cast<double>(n);
  return result;
}

double bumpiness_d(const DepthMap& d1, const DepthMap& d2, const std::optional<CameraIntrinsics>& intrinsics) {
  check_pair(d1, d2);
  auto as_disparity = [&](DepthMap m) {
    if (m.kind == DepthKind::Disparity) return m;
    if (intrinsics) m.intrinsics = intrinsics;
    return convert_kind(m, DepthKind::Disparity);
  };
  const DepthMap a = as_disparity(d1);
  const DepthMap b = as_disparity(d2);
  const Eigen::Index h = a.height(), w = a.width();
  const Grid diff = a.values - b.values;
  const Mask joint = a.mask && b.mask;

  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index y = 1; y + 1 < h; ++y) {
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      if (!joint.block(y - 1, x - 1, 3, 3).all()) continue;
      const double hxx = diff(y, x + 1) - 2 * diff(y, x) + diff(y, x - 1);
      const double hyy = diff(y + 1, x) - 2 * diff(y, x) + diff(y - 1, x);
      const double hxy = (diff(y + 1, x + 1) - diff(y + 1, x - 1) - diff(y - 1, x + 1) + diff(y - 1, x - 1)) / 4.0;
      const double frob = std::sqrt(hxx * hxx + hyy * hyy + 2 * hxy * hxy);
      sum += std::min(0.05, frob) * 100.0;
      ++n;
    }
  }
  require(n > 0, ErrorCode::EmptyIntersection, "bumpiness_d: no jointly valid interior pixels");
  return sum / static_cast<double>(n);
}

double mse_v(const DepthMap& d1, const DepthMap& d2, const LightRig& rig, NormalModel model) {
  check_pair(d1, d2);
  const auto r1 = basis_renderings(d1, rig, model);
  const auto r2 = basis_renderings(d2, rig, model);
  const Mask joint = r1[0].mask && r2[0].mask;
  const auto n = static_cast<double>(joint.count());
  require(n > 0, ErrorCode::EmptyIntersection, "mse_v: no jointly valid normals");
  double sum = 0.0;
  for (int m = 0; m < 3; ++m) {
    sum += ((r1[m].values - r2[m].values).square() * joint.cast<double>()).sum();
  }
  return sum / (3.0 * n);
}

double rendering_rmse(const Rendering& r1, const Rendering& r2) {
  check_pair(r1, r2);
  const Mask joint = r1.mask && r2.mask;
  const auto n = static_cast<double>(joint.count());
  require(n > 0, ErrorCode::EmptyIntersection, "no jointly valid rendering pixels");
  return std::sqrt(((r1.values - r2.values).square() * joint.cast<double>()).sum() / n);
}

double rmse_v1(const DepthMap& d1, const DepthMap& d2, const Vec3& light, NormalModel model) {
  check_pair(d1, d2);
  return rendering_rmse(render(normals_from_depth(d1, model), light), render(normals_from_depth(d2, model), light));
}

double ssim_v(const Rendering& r1, const Rendering& r2, const SsimParams& params) {
  check_pair(r1, r2);
  const int win = params.window;
  require(win >= 3 && win % 2 == 1, ErrorCode::InvalidArgument, "SSIM window must be odd and >= 3");
  require(win <= r1.width() && win <= r1.height(), ErrorCode::InvalidArgument, "SSIM window larger than image");

  const Grid valid = (r1.mask && r2.mask).cast<double>();
  const Grid s_valid = integral(valid);
  const double area = static_cast<double>(win) * win;
  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index y0 = 0; y0 + win <= r1.height(); ++y0) {
    for (Eigen::Index x0 = 0; x0 + win <= r1.width(); ++x0) {
      if (box_sum(s_valid, y0, x0, win) < area - 0.5) continue;
      // Two-pass moments keep flat windows exact.
      const auto a = r1.values.block(y0, x0, win, win);
      const auto b = r2.values.block(y0, x0, win, win);
      SsimWindowStats st;
      st.mu1 = a.sum() / area;
      st.mu2 = b.sum() / area;
      const Grid da = a - st.mu1;
      const Grid db = b - st.mu2;
      st.sigma1 = std::sqrt(da.square().sum() / area);
      st.sigma2 = std::sqrt(db.square().sum() / area);
      st.sigma12 = (da * db).sum() / area;
      sum += st.luminance(params.c1) * st.contrast(params.c2) * st.structure(params.c2);
      ++n;
    }
  }
  require(n > 0, ErrorCode::EmptyIntersection, "ssim_v: no fully valid window");
  return sum / static_cast<double>(n);
}

double badpix_v(const Rendering& r1, const Rendering& r2, int tau_shades) {
  check_pair(r1, r2);
  require(tau_shades >= 0, ErrorCode::InvalidArgument, "badpix threshold must be nonnegative");
  const double tau = tau_shades / 255.0;
  std::size_t bad = 0, n = 0;
  for (Eigen::Index y = 0; y < r1.height(); ++y) {
    for (Eigen::Index x = 0; x < r1.width(); ++x) {
      if (!r1.mask(y, x) || !r2.mask(y, x)) continue;
      const double a = (r1.values(y, x) + 1.0) / 2.0;
      const double b = (r2.values(y, x) + 1.0) / 2.0;
      if (std::abs(a - b) > tau) ++bad;
      ++n;
    }
  }
  require(n > 0, ErrorCode::EmptyIntersection, "badpix_v: no jointly valid pixels");
  return static_cast<double>(bad) / static_cast<double>(n);
}

std::string to_string(LightLabel label) {
  switch (label) {
    case LightLabel::E1: return "e1";
    case LightLabel::E2: return "e2";
    case LightLabel::E3: return "e3";
    case LightLabel::E4: return "e4";
    case LightLabel::Max: return "max";
    case LightLabel::Avg: return "avg";
    case LightLabel::NotApplicable: return "n/a";
  }
  return "n/a";
}

double LightReduction::at(LightLabel label) const {
  switch (label) {
    case LightLabel::E1: return per_light[0];
    case LightLabel::E2: return per_light[1];
    case LightLabel::E3: return per_light[2];
    case LightLabel::E4: return per_light[3];
    case LightLabel::Max: return max;
    case LightLabel::Avg: return avg;
    case LightLabel::NotApplicable: break;
  }
  throw Error(ErrorCode::InvalidArgument, "light reductions have no n/a entry");
}

double evaluate(const RenderingMetricSpec& spec, const Rendering& r1, const Rendering& r2) {
  switch (spec.metric) {
    case RenderingMetric::Dssim: return dssim_v(r1, r2, spec.ssim);
    case RenderingMetric::BadPix: return badpix_v(r1, r2, spec.tau_shades);
    case RenderingMetric::Rmse: return rendering_rmse(r1, r2);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown rendering metric");
}

LightReduction reduce_over_lights(const RenderingMetricSpec& spec, const DepthMap& d1, const DepthMap& d2,
                                  const LightRig& rig, NormalModel model) {
  check_pair(d1, d2);
  rig.validate();
  const NormalMap n1 = normals_from_depth(d1, model);
  const NormalMap n2 = normals_from_depth(d2, model);
  LightReduction out;
  const auto lights = rig.lights();
  for (std::size_t i = 0; i < lights.size(); ++i) {
    out.per_light[i] = evaluate(spec, render(n1, lights[i]), render(n2, lights[i]));
  }
  // Every rendering metric here is a dissimilarity, so the worst is the max.
  out.max = *std::max_element(out.per_light.begin(), out.per_light.end());
  out.avg = std::accumulate(out.per_light.begin(), out.per_light.end(), 0.0) / 4.0;
  return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::DimensionMismatch, "correlation inputs differ in length");
  require(xs.size() >= 3, ErrorCode::InvalidArgument, "correlation needs at least 3 points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0 && syy > 0, ErrorCode::DegenerateInput, "correlation of a constant sequence");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::DimensionMismatch, "correlation inputs differ in length");
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return pearson(rx, ry);
}

void MetricReport::set(const std::string& metric, const LightReduction& r) {
  for (LightLabel label : kLightLabels) set(metric, label, r.at(label));
}

std::optional<double> MetricReport::get(const std::string& metric, LightLabel label) const {
  const auto it = entries.find({metric, label});
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

}  // namespace depthvis
