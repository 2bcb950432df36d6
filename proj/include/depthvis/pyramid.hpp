#pragma once

#include <vector>

#include "depthvis/types.hpp"

namespace depthvis::pyramid {

// Linear Laplacian-pyramid operators and their exact adjoints. Borders clamp.

inline constexpr double kBinomial5[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

template <typename Scalar>
GridT<Scalar> blur(const GridT<Scalar>& g) {
  const Eigen::Index h = g.rows(), w = g.cols();
  GridT<Scalar> tmp(h, w), out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Scalar acc(0);
      for (int k = -2; k <= 2; ++k) acc += kBinomial5[k + 2] * g(y, std::clamp<Eigen::Index>(x + k, 0, w - 1));
      tmp(y, x) = acc;
    }
  }
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Scalar acc(0);
      for (int k = -2; k <= 2; ++k) acc += kBinomial5[k + 2] * tmp(std::clamp<Eigen::Index>(y + k, 0, h - 1), x);
      out(y, x) = acc;
    }
  }
  return out;
}

template <typename Scalar>
GridT<Scalar> blur_adjoint(const GridT<Scalar>& g) {
  const Eigen::Index h = g.rows(), w = g.cols();
  GridT<Scalar> tmp = GridT<Scalar>::Zero(h, w), out = GridT<Scalar>::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      for (int k = -2; k <= 2; ++k) tmp(std::clamp<Eigen::Index>(y + k, 0, h - 1), x) += kBinomial5[k + 2] * g(y, x);
    }
  }
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      for (int k = -2; k <= 2; ++k) out(y, std::clamp<Eigen::Index>(x + k, 0, w - 1)) += kBinomial5[k + 2] * tmp(y, x);
    }
  }
  return out;
}

template <typename Scalar>
GridT<Scalar> decimate(const GridT<Scalar>& g) {
  GridT<Scalar> out(g.rows() / 2, g.cols() / 2);
  for (Eigen::Index y = 0; y < out.rows(); ++y)
    for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = g(2 * y, 2 * x);
  return out;
}

template <typename Scalar>
GridT<Scalar> zero_insert(const GridT<Scalar>& g) {
  GridT<Scalar> out = GridT<Scalar>::Zero(g.rows() * 2, g.cols() * 2);
  for (Eigen::Index y = 0; y < g.rows(); ++y)
    for (Eigen::Index x = 0; x < g.cols(); ++x) out(2 * y, 2 * x) = g(y, x);
  return out;
}

/// One pyramid step down: blur, then keep even samples.
template <typename Scalar>
GridT<Scalar> reduce(const GridT<Scalar>& g) {
  return decimate(blur(g));
}

template <typename Scalar>
GridT<Scalar> reduce_adjoint(const GridT<Scalar>& g) {
  return blur_adjoint(zero_insert(g));
}

/// One pyramid step up: zero insertion, blur, gain 4.
template <typename Scalar>
GridT<Scalar> expand(const GridT<Scalar>& g) {
  return Scalar(4) * blur(zero_insert(g));
}

template <typename Scalar>
GridT<Scalar> expand_adjoint(const GridT<Scalar>& g) {
  return Scalar(4) * decimate(blur_adjoint(g));
}

/// Laplacian bands, finest first; the last entry is the coarse residual.
template <typename Scalar>
std::vector<GridT<Scalar>> laplacian_bands(const GridT<Scalar>& g, int levels) {
  std::vector<GridT<Scalar>> bands;
  GridT<Scalar> current = g;
  for (int l = 0; l + 1 < levels; ++l) {
    GridT<Scalar> next = reduce(current);
    bands.push_back(current - expand(next));
    current = std::move(next);
  }
  bands.push_back(std::move(current));
  return bands;
}

/// Adjoint of `laplacian_bands`: maps per-band cotangents back to the input grid.
template <typename Scalar>
GridT<Scalar> laplacian_bands_adjoint(const std::vector<GridT<Scalar>>& cotangents) {
  const int levels = static_cast<int>(cotangents.size());
  GridT<Scalar> acc = cotangents[levels - 1];
  for (int l = levels - 2; l >= 0; --l) {
    // band_l = G_l - expand(G_{l+1}),  G_{l+1} = reduce(G_l)
    GridT<Scalar> upstream = acc - expand_adjoint(cotangents[l]);
    acc = cotangents[l] + reduce_adjoint(upstream);
  }
  return acc;
}

/// Largest level count <= cap such that both dimensions divide by 2^(levels-1).
inline int max_levels(Eigen::Index height, Eigen::Index width, int cap) {
  int levels = 1;
  while (levels < cap && height % (Eigen::Index{1} << levels) == 0 && width % (Eigen::Index{1} << levels) == 0) {
    ++levels;
  }
  return levels;
}

}  // namespace depthvis::pyramid
