#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "depthvis/geometry.hpp"
#include "depthvis/types.hpp"

namespace depthvis {

enum class DepthFormat { PFM, PGM16, CSVGrid };

DepthFormat depth_format_from_string(const std::string& name);
/// Guess the format from the file extension (.pfm, .pgm, .csv).
DepthFormat depth_format_from_path(const std::filesystem::path& path);

/// Meters per PGM16 unit when the file carries no `# scale` comment.
inline constexpr double kDefaultPgmScale = 1.0 / 1000.0;

/// Loads a depth map. Zero and non-finite samples are marked invalid.
DepthMap load_depth(const std::filesystem::path& path, DepthFormat format,
                    DepthKind kind = DepthKind::OrthogonalDepth);

/// Saves a depth map. Invalid pixels are written as NaN (PFM, CSV) or 0 (PGM16).
/// `pgm_scale` is meters per unit for PGM16 and is written as a `# scale` line.
void save_depth(const DepthMap& map, const std::filesystem::path& path, DepthFormat format,
                std::optional<double> pgm_scale = std::nullopt);

/// 8-bit binary PGM, v -> round((v + 1) / 2 * 255). Invalid pixels are 0.
void save_rendering(const Rendering& rendering, const std::filesystem::path& path);

/// Loads an 8- or 16-bit grayscale PGM and maps it to [0, 1].
Grid load_gray(const std::filesystem::path& path);

struct SceneManifest {
  std::string scene_id;
  std::filesystem::path ground_truth_path;
  DepthFormat format = DepthFormat::PFM;
  std::optional<std::filesystem::path> guide_path;
  DepthKind kind = DepthKind::OrthogonalDepth;
  CameraIntrinsics intrinsics;
  std::vector<int> scale_factors;
  double pixel_pitch = 1.0;

  /// Checks the factor list; with known dimensions also checks divisibility.
  void validate(Eigen::Index width = 0, Eigen::Index height = 0) const;
};

/// Reads a dataset manifest (JSON, see README). Relative paths resolve
/// against the manifest's directory.
std::vector<SceneManifest> load_manifest(const std::filesystem::path& path);

}  // namespace depthvis
