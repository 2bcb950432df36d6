#pragma once

// Random fixtures and brute-force reference implementations. The oracles are
// written from the formulas with plain loops and share no code with the
// library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "depthvis/geometry.hpp"
#include "depthvis/metrics.hpp"

namespace depthvis::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240611);
  return engine;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Grid random_grid(Eigen::Index h, Eigen::Index w, double lo = -1.0, double hi = 1.0) {
  Grid g(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) g(y, x) = uniform(lo, hi);
  return g;
}

/// Positive depth map around `base` with perturbations of size `amp`.
inline DepthMap random_depth(Eigen::Index h, Eigen::Index w, double base = 2.0, double amp = 0.3) {
  DepthMap m(random_grid(h, w, base - amp, base + amp));
  return m;
}

/// Uniformly random rotation via a normalized random quaternion.
inline Eigen::Matrix3d random_rotation() {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng()), n(rng()), n(rng()), n(rng()));
  return q.normalized().toRotationMatrix();
}

inline Vec3 random_unit() {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng()), n(rng()), n(rng()));
  return v.normalized();
}

// --- geometry ---------------------------------------------------------------

struct OracleNormals {
  std::vector<std::vector<Vec3>> n;
  std::vector<std::vector<bool>> valid;
};

/// Height-field normals from the anchored triangle of each pixel: vertices
/// (x, y), (x+1, y), (x, y+1), falling back to the mirrored triangle on the
/// last column / row. The face normal of that triangle is the normal of the
/// forward-difference plane.
inline OracleNormals triangle_normals(const DepthMap& m) {
  const int h = static_cast<int>(m.height()), w = static_cast<int>(m.width());
  const double p = m.pixel_pitch;
  OracleNormals out;
  out.n.assign(h, std::vector<Vec3>(w, Vec3::Zero()));
  out.valid.assign(h, std::vector<bool>(w, false));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool ok = true;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w && !m.mask(yy, xx)) ok = false;
        }
      if (!ok) continue;
      const int xa = x + 1 < w ? x : x - 1;
      const int ya = y + 1 < h ? y : y - 1;
      const Vec3 v0(xa * p, y * p, m.values(y, xa));
      const Vec3 v1((xa + 1) * p, y * p, m.values(y, xa + 1));
      const Vec3 u0(x * p, ya * p, m.values(ya, x));
      const Vec3 u1(x * p, (ya + 1) * p, m.values(ya + 1, x));
      Vec3 face = (v1 - v0).cross(u1 - u0);
      if (face.z() < 0) face = -face;
      out.n[y][x] = face.normalized();
      out.valid[y][x] = true;
    }
  }
  return out;
}

// --- metrics -----------------------------------------------------------------

/// (1 / 3N) sum_m sum_px (e_m . n1 - e_m . n2)^2 over rig basis lights.
inline double brute_mse_v(const DepthMap& a, const DepthMap& b, const LightRig& rig) {
  const OracleNormals na = triangle_normals(a), nb = triangle_normals(b);
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!na.valid[y][x] || !nb.valid[y][x]) continue;
      ++count;
      for (const Vec3& e : rig.basis) {
        const double d = e.dot(na.n[y][x]) - e.dot(nb.n[y][x]);
        sum += d * d;
      }
    }
  return sum / (3.0 * count);
}

/// Literal per-window SSIM: every 7x7 window fully inside and jointly valid.
inline double brute_ssim(const Rendering& r1, const Rendering& r2, int win = 7, double c1 = 0.02 * 0.02,
                         double c2 = 0.06 * 0.06) {
  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + win <= r1.height(); ++y0) {
    for (int x0 = 0; x0 + win <= r1.width(); ++x0) {
      bool ok = true;
      std::vector<double> a, b;
      for (int y = y0; y < y0 + win; ++y)
        for (int x = x0; x < x0 + win; ++x) {
          if (!r1.mask(y, x) || !r2.mask(y, x)) ok = false;
          a.push_back(r1.values(y, x));
          b.push_back(r2.values(y, x));
        }
      if (!ok) continue;
      const double n = static_cast<double>(a.size());
      double ma = 0, mb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
      }
      double va = 0, vb = 0, cov = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma) / n;
        vb += (b[i] - mb) * (b[i] - mb) / n;
        cov += (a[i] - ma) * (b[i] - mb) / n;
      }
      const double sa = std::sqrt(va), sb = std::sqrt(vb);
      const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      const double c = (2 * sa * sb + c2) / (va + vb + c2);
      const double s = (cov + c2 / 2) / (sa * sb + c2 / 2);
      total += l * c * s;
      ++windows;
    }
  }
  return total / windows;
}

inline double brute_badpix_abs(const DepthMap& a, const DepthMap& b, double tau) {
  int bad = 0, n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!a.mask(y, x) || !b.mask(y, x)) continue;
      ++n;
      if (std::abs(a.values(y, x) - b.values(y, x)) > tau) ++bad;
    }
  return static_cast<double>(bad) / n;
}

inline double brute_badpix_rel(const DepthMap& a, const DepthMap& b, double tau_pct) {
  int bad = 0, n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!a.mask(y, x) || !b.mask(y, x) || b.values(y, x) == 0.0) continue;
      ++n;
      if (std::abs(a.values(y, x) - b.values(y, x)) / std::abs(b.values(y, x)) > tau_pct / 100.0) ++bad;
    }
  return static_cast<double>(bad) / n;
}

inline double brute_badpix_v(const Rendering& a, const Rendering& b, int tau) {
  int bad = 0, n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!a.mask(y, x) || !b.mask(y, x)) continue;
      ++n;
      const double pa = (a.values(y, x) + 1) / 2, pb = (b.values(y, x) + 1) / 2;
      if (std::abs(pa - pb) > tau / 255.0) ++bad;
    }
  return static_cast<double>(bad) / n;
}

/// Bumpiness on two disparity maps: mean over interior pixels of
/// min(0.05, |H|_F) * 100 with central-difference Hessian of the difference.
inline double brute_bumpiness(const Grid& a, const Grid& b) {
  const Grid h = a - b;
  double total = 0.0;
  int n = 0;
  for (int y = 1; y + 1 < h.rows(); ++y)
    for (int x = 1; x + 1 < h.cols(); ++x) {
      const double hxx = h(y, x + 1) - 2 * h(y, x) + h(y, x - 1);
      const double hyy = h(y + 1, x) - 2 * h(y, x) + h(y - 1, x);
      const double hxy = (h(y + 1, x + 1) - h(y + 1, x - 1) - h(y - 1, x + 1) + h(y - 1, x - 1)) / 4.0;
      const double f = std::sqrt(hxx * hxx + hyy * hyy + 2 * hxy * hxy);
      total += std::min(0.05, f) * 100.0;
      ++n;
    }
  return total / n;
}

// --- loss --------------------------------------------------------------------

/// 2D 5x5 binomial convolution with clamped borders.
inline Grid brute_blur(const Grid& g) {
  const double k[5] = {1, 4, 6, 4, 1};
  Grid out(g.rows(), g.cols());
  for (int y = 0; y < g.rows(); ++y)
    for (int x = 0; x < g.cols(); ++x) {
      double acc = 0;
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
          const int yy = std::clamp<int>(y + i, 0, static_cast<int>(g.rows()) - 1);
          const int xx = std::clamp<int>(x + j, 0, static_cast<int>(g.cols()) - 1);
          acc += k[i + 2] * k[j + 2] / 256.0 * g(yy, xx);
        }
      out(y, x) = acc;
    }
  return out;
}

inline double brute_lap1(const Grid& a, const Grid& b, int levels) {
  Grid cur = a - b;
  double value = 0.0;
  for (int j = 0; j < levels; ++j) {
    Grid band = cur;
    Grid next;
    if (j + 1 < levels) {
      const Grid blurred = brute_blur(cur);
      next = Grid(cur.rows() / 2, cur.cols() / 2);
      for (int y = 0; y < next.rows(); ++y)
        for (int x = 0; x < next.cols(); ++x) next(y, x) = blurred(2 * y, 2 * x);
      Grid up = Grid::Zero(cur.rows(), cur.cols());
      for (int y = 0; y < next.rows(); ++y)
        for (int x = 0; x < next.cols(); ++x) up(2 * y, 2 * x) = 4.0 * next(y, x);
      band = cur - brute_blur(up);
    }
    double s = 0.0;
    for (int y = 0; y < band.rows(); ++y)
      for (int x = 0; x < band.cols(); ++x) s += std::abs(band(y, x));
    value += std::pow(4.0, j) * s / static_cast<double>(band.size());
    cur = next;
  }
  return value;
}

}  // namespace depthvis::testing
