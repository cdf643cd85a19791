#include "ttmap/io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ttmap {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "container formats are little-endian");

namespace {

constexpr char kMapMagic[8] = {'T', 'T', 'M', 'A', 'P', 'v', '0', '1'};
constexpr std::uint32_t kMapVersion = 1;
constexpr char kGtMagic[8] = {'T', 'T', 'G', 'T', 'v', '0', '0', '1'};
constexpr std::uint32_t kGtVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(path + ": truncated file");
  return value;
}

}  // namespace

ScanFormat scan_format_from_string(const std::string& name) {
  if (name == "bin-xyzi" || name == "bin") return ScanFormat::BinXYZI;
  if (name == "csv-xyz" || name == "csv") return ScanFormat::CsvXYZ;
  throw std::runtime_error("unknown scan format '" + name + "' (expected bin-xyzi or csv-xyz)");
}

std::vector<std::string> list_scan_files(const std::string& dir, ScanFormat format) {
  const std::string ext = format == ScanFormat::BinXYZI ? ".bin" : ".csv";
  if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

RangeScan load_scan(const std::string& path, ScanFormat format) {
  RangeScan scan;
  if (format == ScanFormat::BinXYZI) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0);
    constexpr std::streamoff kRecord = 4 * sizeof(float);
    if (size % kRecord != 0) {
      throw std::runtime_error(path + ": truncated record at offset " +
                               std::to_string(size - size % kRecord));
    }
    const std::size_t count = static_cast<std::size_t>(size / kRecord);
    scan.points.reserve(count);
    scan.intensities.reserve(count);
    std::vector<float> buffer(count * 4);
    if (count > 0) {
      in.read(reinterpret_cast<char*>(buffer.data()), size);
      if (!in) throw std::runtime_error(path + ": read failed");
    }
    for (std::size_t i = 0; i < count; ++i) {
      scan.points.emplace_back(buffer[4 * i], buffer[4 * i + 1], buffer[4 * i + 2]);
      scan.intensities.push_back(buffer[4 * i + 3]);
    }
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::array<double, 3> xyz{};
      const char* ptr = line.c_str();
      const char* end = ptr + line.size();
      for (int f = 0; f < 3; ++f) {
        while (ptr < end && (*ptr == ' ' || *ptr == '\t' || *ptr == ',')) ++ptr;
        const auto [next, ec] = std::from_chars(ptr, end, xyz[f]);
        if (ec != std::errc{}) {
          throw std::runtime_error(path + ": non-numeric field " + std::to_string(f + 1) +
                                   " on line " + std::to_string(line_no));
        }
        ptr = next;
      }
      scan.points.emplace_back(xyz[0], xyz[1], xyz[2]);
    }
  }
  return scan;
}

void save_scan(const RangeScan& scan, const std::string& path, ScanFormat format) {
  if (format == ScanFormat::BinXYZI) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot write");
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      const float record[4] = {static_cast<float>(scan.points[i].x()),
                               static_cast<float>(scan.points[i].y()),
                               static_cast<float>(scan.points[i].z()),
                               i < scan.intensities.size() ? scan.intensities[i] : 0.0f};
      out.write(reinterpret_cast<const char*>(record), sizeof(record));
    }
  } else {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write");
    out.precision(9);
    for (const Vec3& p : scan.points) {
      out << p.x() << "," << p.y() << "," << p.z() << "\n";
    }
  }
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

std::vector<Pose> load_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::array<double, 12> vals{};
    int got = 0;
    double v;
    while (row >> v) {
      if (got < 12) vals[got] = v;
      ++got;
    }
    if (got != 12) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + " has " +
                               std::to_string(got) + " fields, expected 12");
    }
    Pose pose;
    pose.rotation << vals[0], vals[1], vals[2], vals[4], vals[5], vals[6], vals[8], vals[9],
        vals[10];
    pose.translation = Vec3(vals[3], vals[7], vals[11]);
    const double drift = (pose.rotation.transpose() * pose.rotation - Mat3::Identity())
                             .cwiseAbs()
                             .maxCoeff();
    const double det_err = std::abs(pose.rotation.determinant() - 1.0);
    if (drift > 1e-2 || det_err > 1e-2) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": rotation is not orthonormal (drift " +
                               std::to_string(drift) + ")");
    }
    if (drift > 1e-12 || det_err > 1e-12) {
      pose.rotation = nearest_rotation(pose.rotation);
    }
    poses.push_back(pose);
  }
  return poses;
}

void save_poses(const std::vector<Pose>& poses, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out.precision(17);
  for (const Pose& pose : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << pose.rotation(r, c) << " ";
      out << pose.translation(r);
      out << (r == 2 ? "\n" : " ");
    }
  }
}

void export_map(const StaticTerrainMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out.write(kMapMagic, sizeof(kMapMagic));
  write_pod(out, kMapVersion);
  write_pod(out, map.resolution());
  write_pod(out, 0.0);  // lattice origin x
  write_pod(out, 0.0);  // lattice origin y
  write_pod(out, static_cast<std::uint32_t>(map.tile_size()));
  write_pod(out, static_cast<std::uint64_t>(map.cell_count()));
  map.for_each_sorted([&](CellKey key, const FusedCell& cell) {
    write_pod(out, key.x);
    write_pod(out, key.y);
    write_pod(out, (key.x + 0.5) * map.resolution());
    write_pod(out, (key.y + 0.5) * map.resolution());
    write_pod(out, cell.h_max);
    write_pod(out, cell.h_min);
    write_pod(out, cell.n_z);
    write_pod(out, cell.r_step);
    write_pod(out, cell.r_incl);
    write_pod(out, cell.collision_risk());
    write_pod(out, cell.var_hmax);
    write_pod(out, cell.var_hmin);
    write_pod(out, cell.var_nz);
    write_pod(out, cell.var_rstep);
    write_pod(out, cell.var_rincl);
    write_pod(out, cell.coll_logodds);
    write_pod(out, cell.update_count);
  });
  if (!out) throw std::runtime_error(path + ": write failed");
}

StaticTerrainMap import_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMapMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + ": not a terrain map file (bad magic)");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kMapVersion) {
    throw std::runtime_error(path + ": unsupported map version " + std::to_string(version) +
                             " (expected " + std::to_string(kMapVersion) + ")");
  }
  const double resolution = read_pod<double>(in, path);
  read_pod<double>(in, path);  // lattice origin x
  read_pod<double>(in, path);  // lattice origin y
  const auto tile_size = read_pod<std::uint32_t>(in, path);
  const auto cell_count = read_pod<std::uint64_t>(in, path);

  StaticTerrainMap map(resolution, static_cast<int>(tile_size));
  for (std::uint64_t i = 0; i < cell_count; ++i) {
    const auto gx = read_pod<std::int64_t>(in, path);
    const auto gy = read_pod<std::int64_t>(in, path);
    read_pod<double>(in, path);  // center x (derived)
    read_pod<double>(in, path);  // center y (derived)
    FusedCell& cell = map.get_or_create({gx, gy});
    cell.h_max = read_pod<double>(in, path);
    cell.h_min = read_pod<double>(in, path);
    cell.n_z = read_pod<double>(in, path);
    cell.r_step = read_pod<double>(in, path);
    cell.r_incl = read_pod<double>(in, path);
    read_pod<double>(in, path);  // realized collision risk (derived)
    cell.var_hmax = read_pod<double>(in, path);
    cell.var_hmin = read_pod<double>(in, path);
    cell.var_nz = read_pod<double>(in, path);
    cell.var_rstep = read_pod<double>(in, path);
    cell.var_rincl = read_pod<double>(in, path);
    cell.coll_logodds = read_pod<double>(in, path);
    cell.update_count = read_pod<std::uint64_t>(in, path);
    map.note_created();
  }
  return map;
}

void export_ground_truth(const GroundTruthGrid& gt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out.write(kGtMagic, sizeof(kGtMagic));
  write_pod(out, kGtVersion);
  write_pod(out, gt.spec.resolution);
  write_pod(out, gt.spec.origin_x);
  write_pod(out, gt.spec.origin_y);
  write_pod(out, static_cast<std::uint32_t>(gt.spec.cols()));
  write_pod(out, static_cast<std::uint32_t>(gt.spec.rows()));
  for (std::size_t i = 0; i < gt.h_max.size(); ++i) {
    write_pod(out, gt.h_max[i]);
    const std::uint8_t flags =
        static_cast<std::uint8_t>((gt.has_height[i] ? 1u : 0u) | (gt.collision[i] ? 2u : 0u));
    write_pod(out, flags);
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

GroundTruthGrid import_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGtMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + ": not a ground-truth file (bad magic)");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kGtVersion) {
    throw std::runtime_error(path + ": unsupported ground-truth version " +
                             std::to_string(version));
  }
  GroundTruthGrid gt;
  gt.spec.resolution = read_pod<double>(in, path);
  gt.spec.origin_x = read_pod<double>(in, path);
  gt.spec.origin_y = read_pod<double>(in, path);
  const auto cols = read_pod<std::uint32_t>(in, path);
  const auto rows = read_pod<std::uint32_t>(in, path);
  gt.spec.extent_x = cols * gt.spec.resolution;
  gt.spec.extent_y = rows * gt.spec.resolution;
  const std::size_t count = static_cast<std::size_t>(cols) * rows;
  gt.h_max.resize(count);
  gt.has_height.resize(count);
  gt.collision.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    gt.h_max[i] = read_pod<double>(in, path);
    const auto flags = read_pod<std::uint8_t>(in, path);
    gt.has_height[i] = (flags & 1u) ? 1 : 0;
    gt.collision[i] = (flags & 2u) ? 1 : 0;
  }
  return gt;
}

MapLayer layer_from_string(const std::string& name) {
  if (name == "h_max") return MapLayer::HMax;
  if (name == "h_min") return MapLayer::HMin;
  if (name == "n_z") return MapLayer::NZ;
  if (name == "r_step") return MapLayer::RStep;
  if (name == "r_incl") return MapLayer::RIncl;
  if (name == "r_coll") return MapLayer::RColl;
  throw std::runtime_error("unknown layer '" + name +
                           "' (expected h_max|h_min|n_z|r_step|r_incl|r_coll)");
}

std::array<std::uint8_t, 3> risk_color(double risk) {
  // Anchors at 0, 0.2, 0.4, 0.6, 0.8, 1: yellow, orange, green, blue,
  // purple, black; linear in between (256-entry table semantics).
  static constexpr double kStops[6] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  static constexpr std::uint8_t kColors[6][3] = {
      {255, 221, 0}, {255, 140, 0}, {0, 170, 0}, {0, 80, 220}, {130, 0, 160}, {0, 0, 0}};
  const double r = std::clamp(risk, 0.0, 1.0);
  for (int i = 1; i < 6; ++i) {
    if (r <= kStops[i]) {
      const double s = (r - kStops[i - 1]) / (kStops[i] - kStops[i - 1]);
      std::array<std::uint8_t, 3> rgb{};
      for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<std::uint8_t>(
            std::lround(kColors[i - 1][c] + s * (kColors[i][c] - kColors[i - 1][c])));
      }
      return rgb;
    }
  }
  return {0, 0, 0};
}

void render_layer(const MapSnapshot& snap, MapLayer layer, const std::string& path) {
  const int cols = snap.spec.cols();
  const int rows = snap.spec.rows();
  const bool height_layer = layer == MapLayer::HMax || layer == MapLayer::HMin;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const auto value_of = [&](const SnapshotCell& cell) -> double {
    switch (layer) {
      case MapLayer::HMax: return cell.h_max;
      case MapLayer::HMin: return cell.h_min;
      case MapLayer::NZ: return cell.n_z;
      case MapLayer::RStep: return cell.r_step;
      case MapLayer::RIncl: return cell.r_incl;
      case MapLayer::RColl: return cell.r_coll;
    }
    return 0.0;
  };
  if (height_layer) {
    for (const SnapshotCell& cell : snap.cells) {
      if (!cell.valid) continue;
      lo = std::min(lo, value_of(cell));
      hi = std::max(hi, value_of(cell));
    }
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    std::ofstream sidecar(path + ".bounds.txt");
    sidecar << "min=" << lo << "\nmax=" << hi << "\n";
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "P6\n" << cols << " " << rows << "\n255\n";
  // Row 0 of the image is the northernmost (max y) row.
  for (int row = rows - 1; row >= 0; --row) {
    for (int col = 0; col < cols; ++col) {
      const SnapshotCell& cell = snap.at(col, row);
      std::array<std::uint8_t, 3> rgb{255, 255, 255};
      if (cell.valid) {
        if (height_layer) {
          const double span = hi - lo;
          const double s = span > 0.0 ? (value_of(cell) - lo) / span : 0.0;
          const auto g = static_cast<std::uint8_t>(std::lround(255.0 * s));
          rgb = {g, g, g};
        } else {
          rgb = risk_color(value_of(cell));
        }
      }
      out.write(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

GridSpec populated_window(const StaticTerrainMap& map) {
  std::int64_t min_x = std::numeric_limits<std::int64_t>::max();
  std::int64_t min_y = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_x = std::numeric_limits<std::int64_t>::min();
  std::int64_t max_y = std::numeric_limits<std::int64_t>::min();
  map.for_each_sorted([&](CellKey key, const FusedCell&) {
    min_x = std::min(min_x, key.x);
    min_y = std::min(min_y, key.y);
    max_x = std::max(max_x, key.x);
    max_y = std::max(max_y, key.y);
  });
  GridSpec spec;
  spec.resolution = map.resolution();
  if (min_x > max_x) {
    spec.extent_x = spec.extent_y = map.resolution();
    return spec;
  }
  spec.origin_x = min_x * map.resolution();
  spec.origin_y = min_y * map.resolution();
  spec.extent_x = (max_x - min_x + 1) * map.resolution();
  spec.extent_y = (max_y - min_y + 1) * map.resolution();
  return spec;
}

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "terrain map evaluation\n";
  out << "  valid            : " << (r.valid ? "yes" : "no") << "\n";
  out << "  cells compared   : " << r.cells_compared << "\n";
  out << "  coverage misses  : " << r.coverage_misses << "\n";
  out << "  mhe [m]          : " << r.mhe << "   (mean height error over all compared cells;"
      << " also reported elsewhere as MAE)\n";
  out << "  mte [m]          : " << r.mte << "   (mean height error over traversable cells)\n";
  out << "  precision        : " << r.precision << "\n";
  out << "  recall           : " << r.recall << "\n";
  out << "  f1               : " << r.f1 << "\n";
  out << "  accuracy         : " << r.accuracy << "\n";
  out << "  tp/fp/fn/tn      : " << r.tp << "/" << r.fp << "/" << r.fn << "/" << r.tn << "\n";
  out << "  gt collisions    : " << r.gt_collisions << "\n";
  return out.str();
}

std::string report_keyvalues(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "valid=" << (r.valid ? 1 : 0) << "\n";
  out << "cells_compared=" << r.cells_compared << "\n";
  out << "coverage_misses=" << r.coverage_misses << "\n";
  out << "mhe=" << r.mhe << "\n";
  out << "mte=" << r.mte << "\n";
  out << "precision=" << r.precision << "\n";
  out << "recall=" << r.recall << "\n";
  out << "f1=" << r.f1 << "\n";
  out << "accuracy=" << r.accuracy << "\n";
  out << "tp=" << r.tp << "\n";
  out << "fp=" << r.fp << "\n";
  out << "fn=" << r.fn << "\n";
  out << "tn=" << r.tn << "\n";
  out << "gt_collisions=" << r.gt_collisions << "\n";
  return out.str();
}

void write_report(const EvalReport& report, const std::string& text_path,
                  const std::string& kv_path) {
  if (!text_path.empty()) {
    std::ofstream out(text_path);
    if (!out) throw std::runtime_error(text_path + ": cannot write");
    out << report_text(report);
  }
  if (!kv_path.empty()) {
    std::ofstream out(kv_path);
    if (!out) throw std::runtime_error(kv_path + ": cannot write");
    out << report_keyvalues(report);
  }
}

}  // namespace ttmap
