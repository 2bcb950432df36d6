#include "depthvis/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace depthvis {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Unreadable, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Unreadable, "read failed for " + path.string());
  return data;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Unwritable, "cannot write " + path.string());
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::Unwritable, "write failed for " + path.string());
}

bool is_sentinel(double v) { return !std::isfinite(v) || v == 0.0; }

// Netpbm-style header tokenizer. Comments run to end of line; a
// `# scale <value>` comment is captured.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& data) : data_(data) {}

  std::string token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (start == pos_) throw Error(ErrorCode::MalformedHeader, "unexpected end of header");
    return data_.substr(start, pos_ - start);
  }

  long integer() {
    const std::string t = token();
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw Error(ErrorCode::MalformedHeader, "bad integer '" + t + "'");
    return v;
  }

  double real() {
    const std::string t = token();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw Error(ErrorCode::MalformedHeader, "bad number '" + t + "'");
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  std::size_t data_offset() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      throw Error(ErrorCode::MalformedHeader, "missing separator before sample data");
    }
    return pos_ + 1;
  }

  std::optional<double> scale() const { return scale_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        const std::size_t eol = data_.find('\n', pos_);
        const std::string line = data_.substr(pos_ + 1, eol == std::string::npos ? std::string::npos : eol - pos_ - 1);
        parse_comment(line);
        pos_ = eol == std::string::npos ? data_.size() : eol + 1;
      } else {
        break;
      }
    }
  }

  void parse_comment(const std::string& line) {
    std::istringstream ss(line);
    std::string key;
    double value = 0;
    if (ss >> key && key == "scale") {
      if (!(ss >> value) || !(value > 0) || !std::isfinite(value)) {
        throw Error(ErrorCode::MalformedHeader, "bad scale comment");
      }
      scale_ = value;
    }
  }

  const std::string& data_;
  std::size_t pos_ = 0;
  std::optional<double> scale_;
};

void check_dims(long w, long h) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::MalformedHeader, "non-positive image dimensions");
}

DepthMap load_pfm(const fs::path& path, DepthKind kind) {
  const std::string data = read_file(path);
  HeaderReader header(data);
  const std::string magic = header.token();
  if (magic != "Pf") throw Error(ErrorCode::MalformedHeader, "expected single-channel 'Pf' magic, got '" + magic + "'");
  const long w = header.integer();
  const long h = header.integer();
  check_dims(w, h);
  const double scale = header.real();
  if (scale == 0.0 || !std::isfinite(scale)) throw Error(ErrorCode::MalformedHeader, "bad PFM scale");
  const bool little = scale < 0;
  const std::size_t offset = header.data_offset();
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() - offset != count * 4) {
    throw Error(ErrorCode::DimensionMismatch, "PFM sample count does not match header dimensions");
  }

  Grid values(h, w);
  Mask mask(h, w);
  const bool host_little = std::endian::native == std::endian::little;
  for (long row = 0; row < h; ++row) {
    // PFM stores the bottom row first.
    const long y = h - 1 - row;
    for (long x = 0; x < w; ++x) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, data.data() + offset + (static_cast<std::size_t>(row) * w + x) * 4, 4);
      if (little != host_little) bits = __builtin_bswap32(bits);
      const double v = std::bit_cast<float>(bits);
      values(y, x) = v;
      mask(y, x) = !is_sentinel(v);
    }
  }
  return DepthMap(std::move(values), std::move(mask), kind);
}

void save_pfm(const DepthMap& map, const fs::path& path) {
  auto out = open_for_write(path);
  out << "Pf\n" << map.width() << ' ' << map.height() << "\n-1.0\n";
  std::string buf(static_cast<std::size_t>(map.width() * map.height()) * 4, '\0');
  std::size_t k = 0;
  for (Eigen::Index y = map.height() - 1; y >= 0; --y) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      const float v = map.valid(y, x) ? static_cast<float>(map.values(y, x)) : std::numeric_limits<float>::quiet_NaN();
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(buf.data() + k, &bits, 4);
      k += 4;
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  finish_write(out, path);
}

struct Pgm {
  long width = 0;
  long height = 0;
  long maxval = 0;
  std::optional<double> scale;
  std::vector<std::uint16_t> samples;
};

Pgm read_pgm(const fs::path& path) {
  const std::string data = read_file(path);
  HeaderReader header(data);
  const std::string magic = header.token();
  if (magic != "P5") throw Error(ErrorCode::MalformedHeader, "expected binary 'P5' magic, got '" + magic + "'");
  Pgm pgm;
  pgm.width = header.integer();
  pgm.height = header.integer();
  check_dims(pgm.width, pgm.height);
  pgm.maxval = header.integer();
  if (pgm.maxval <= 0 || pgm.maxval > 65535) throw Error(ErrorCode::MalformedHeader, "bad PGM maxval");
  pgm.scale = header.scale();
  const std::size_t offset = header.data_offset();
  const std::size_t count = static_cast<std::size_t>(pgm.width) * static_cast<std::size_t>(pgm.height);
  const std::size_t bytes = pgm.maxval > 255 ? 2 : 1;
  if (data.size() - offset != count * bytes) {
    throw Error(ErrorCode::DimensionMismatch, "PGM sample count does not match header dimensions");
  }
  pgm.samples.resize(count);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + offset);
  for (std::size_t i = 0; i < count; ++i) {
    pgm.samples[i] = bytes == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
  }
  return pgm;
}

DepthMap load_pgm16(const fs::path& path, DepthKind kind) {
  const Pgm pgm = read_pgm(path);
  if (pgm.maxval != 65535) throw Error(ErrorCode::MalformedHeader, "PGM16 requires maxval 65535");
  const double scale = pgm.scale.value_or(kDefaultPgmScale);
  Grid values(pgm.height, pgm.width);
  Mask mask(pgm.height, pgm.width);
  for (long y = 0; y < pgm.height; ++y) {
    for (long x = 0; x < pgm.width; ++x) {
      const std::uint16_t s = pgm.samples[static_cast<std::size_t>(y * pgm.width + x)];
      values(y, x) = s * scale;
      mask(y, x) = s != 0;
    }
  }
  return DepthMap(std::move(values), std::move(mask), kind);
}

void save_pgm16(const DepthMap& map, const fs::path& path, double scale) {
  require(scale > 0 && std::isfinite(scale), ErrorCode::InvalidArgument, "PGM16 scale must be positive");
  std::string buf(static_cast<std::size_t>(map.width() * map.height()) * 2, '\0');
  std::size_t k = 0;
  for (Eigen::Index y = 0; y < map.height(); ++y) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      long q = 0;
      if (map.valid(y, x)) {
        const double units = std::round(map.values(y, x) / scale);
        if (!(units >= 1.0 && units <= 65535.0)) {
          throw Error(ErrorCode::RangeOverflow, "value does not fit PGM16 at the given scale");
        }
        q = static_cast<long>(units);
      }
      buf[k++] = static_cast<char>((q >> 8) & 0xff);
      buf[k++] = static_cast<char>(q & 0xff);
    }
  }
  auto out = open_for_write(path);
  char scale_text[64];
  std::snprintf(scale_text, sizeof scale_text, "%.17g", scale);
  out << "P5\n# scale " << scale_text << '\n' << map.width() << ' ' << map.height() << "\n65535\n";
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  finish_write(out, path);
}

DepthMap load_csv(const fs::path& path, DepthKind kind) {
  const std::string data = read_file(path);
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string cell;
  auto flush_cell = [&] {
    std::size_t b = cell.find_first_not_of(" \t\r");
    std::size_t e = cell.find_last_not_of(" \t\r");
    const std::string t = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
    cell.clear();
    if (t.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw Error(ErrorCode::MalformedHeader, "bad CSV cell '" + t + "'");
    row.push_back(v);
    return true;
  };
  auto flush_row = [&] {
    const bool had_cell = flush_cell();
    if (!row.empty()) {
      rows.push_back(std::move(row));
    } else if (had_cell) {
      rows.emplace_back();
    }
    row.clear();
  };
  for (char c : data) {
    if (c == ',') {
      if (!flush_cell()) throw Error(ErrorCode::MalformedHeader, "empty CSV cell");
    } else if (c == ';' || c == '\n') {
      flush_row();
    } else {
      cell.push_back(c);
    }
  }
  flush_row();
  if (rows.empty()) throw Error(ErrorCode::MalformedHeader, "empty CSV grid");
  const std::size_t w = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != w) throw Error(ErrorCode::DimensionMismatch, "ragged CSV grid");
  }
  const auto h = static_cast<Eigen::Index>(rows.size());
  Grid values(h, static_cast<Eigen::Index>(w));
  Mask mask(h, static_cast<Eigen::Index>(w));
  for (Eigen::Index y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double v = rows[static_cast<std::size_t>(y)][x];
      values(y, static_cast<Eigen::Index>(x)) = v;
      mask(y, static_cast<Eigen::Index>(x)) = !is_sentinel(v);
    }
  }
  return DepthMap(std::move(values), std::move(mask), kind);
}

void save_csv(const DepthMap& map, const fs::path& path) {
  auto out = open_for_write(path);
  char text[64];
  for (Eigen::Index y = 0; y < map.height(); ++y) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      if (x > 0) out << ',';
      if (map.valid(y, x)) {
        std::snprintf(text, sizeof text, "%.17g", map.values(y, x));
        out << text;
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
  finish_write(out, path);
}

}  // namespace

DepthFormat depth_format_from_string(const std::string& name) {
  if (name == "pfm" || name == "PFM") return DepthFormat::PFM;
  if (name == "pgm16" || name == "PGM16" || name == "pgm") return DepthFormat::PGM16;
  if (name == "csv" || name == "CSVGrid" || name == "csvgrid") return DepthFormat::CSVGrid;
  throw Error(ErrorCode::InvalidArgument, "unknown depth format '" + name + "'");
}

DepthFormat depth_format_from_path(const fs::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".pfm") return DepthFormat::PFM;
  if (ext == ".pgm") return DepthFormat::PGM16;
  if (ext == ".csv" || ext == ".txt") return DepthFormat::CSVGrid;
  throw Error(ErrorCode::InvalidArgument, "cannot infer depth format from '" + path.string() + "'");
}

DepthMap load_depth(const fs::path& path, DepthFormat format, DepthKind kind) {
  switch (format) {
    case DepthFormat::PFM: return load_pfm(path, kind);
    case DepthFormat::PGM16: return load_pgm16(path, kind);
    case DepthFormat::CSVGrid: return load_csv(path, kind);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown depth format");
}

void save_depth(const DepthMap& map, const fs::path& path, DepthFormat format, std::optional<double> pgm_scale) {
  require(map.mask.rows() == map.height() && map.mask.cols() == map.width(), ErrorCode::DimensionMismatch,
          "mask dimensions differ from value grid");
  switch (format) {
    case DepthFormat::PFM: return save_pfm(map, path);
    case DepthFormat::PGM16: return save_pgm16(map, path, pgm_scale.value_or(kDefaultPgmScale));
    case DepthFormat::CSVGrid: return save_csv(map, path);
  }
}

void save_rendering(const Rendering& rendering, const fs::path& path) {
  std::string buf(static_cast<std::size_t>(rendering.width() * rendering.height()), '\0');
  std::size_t k = 0;
  for (Eigen::Index y = 0; y < rendering.height(); ++y) {
    for (Eigen::Index x = 0; x < rendering.width(); ++x) {
      long p = 0;
      if (rendering.mask(y, x)) {
        const double v = std::clamp(rendering.values(y, x), -1.0, 1.0);
        p = std::lround((v + 1.0) / 2.0 * 255.0);
      }
      buf[k++] = static_cast<char>(static_cast<unsigned char>(p));
    }
  }
  auto out = open_for_write(path);
  out << "P5\n" << rendering.width() << ' ' << rendering.height() << "\n255\n";
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  finish_write(out, path);
}

Grid load_gray(const fs::path& path) {
  const Pgm pgm = read_pgm(path);
  Grid g(pgm.height, pgm.width);
  for (long y = 0; y < pgm.height; ++y) {
    for (long x = 0; x < pgm.width; ++x) {
      g(y, x) = static_cast<double>(pgm.samples[static_cast<std::size_t>(y * pgm.width + x)]) / pgm.maxval;
    }
  }
  return g;
}

void SceneManifest::validate(Eigen::Index width, Eigen::Index height) const {
  require(!scene_id.empty(), ErrorCode::InvalidArgument, "scene_id must be nonempty");
  require(!scale_factors.empty(), ErrorCode::InvalidArgument, "scene " + scene_id + ": scale_factors must be nonempty");
  intrinsics.validate();
  require(pixel_pitch > 0, ErrorCode::InvalidArgument, "scene " + scene_id + ": pixel_pitch must be positive");
  for (int f : scale_factors) {
    require(f >= 2, ErrorCode::InvalidArgument, "scene " + scene_id + ": scale factors must be >= 2");
    if (width > 0 && height > 0) {
      require(width % f == 0 && height % f == 0, ErrorCode::DimensionMismatch,
              "scene " + scene_id + ": factor " + std::to_string(f) + " does not divide the image dimensions");
    }
  }
}

std::vector<SceneManifest> load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("manifest parse error: ") + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::vector<SceneManifest> scenes;
  try {
    for (const auto& rec : doc.at("scenes")) {
      SceneManifest m;
      m.scene_id = rec.at("scene_id").get<std::string>();
      m.ground_truth_path = resolve(rec.at("ground_truth").get<std::string>());
      m.format = rec.contains("format") ? depth_format_from_string(rec["format"].get<std::string>())
                                        : depth_format_from_path(m.ground_truth_path);
      if (rec.contains("guide")) m.guide_path = resolve(rec["guide"].get<std::string>());
      m.kind = depth_kind_from_string(rec.value("kind", std::string("orthogonal")));
      const auto& k = rec.at("intrinsics");
      m.intrinsics.focal_x = k.at("focal_x").get<double>();
      m.intrinsics.focal_y = k.at("focal_y").get<double>();
      m.intrinsics.principal_x = k.at("principal_x").get<double>();
      m.intrinsics.principal_y = k.at("principal_y").get<double>();
      m.intrinsics.baseline = k.value("baseline", 0.2);
      m.scale_factors = rec.at("scale_factors").get<std::vector<int>>();
      m.pixel_pitch = rec.value("pixel_pitch", 1.0);
      m.validate();
      scenes.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("manifest schema error: ") + e.what());
  }
  return scenes;
}

}  // namespace depthvis
