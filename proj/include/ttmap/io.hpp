#pragma once

#include <array>
#include <string>
#include <vector>

#include "ttmap/eval.hpp"
#include "ttmap/fusion.hpp"
#include "ttmap/sim.hpp"

namespace ttmap {

enum class ScanFormat { BinXYZI, CsvXYZ };

ScanFormat scan_format_from_string(const std::string& name);

/// Lists scan files (.bin or .csv by format) in lexicographic order.
std::vector<std::string> list_scan_files(const std::string& dir, ScanFormat format);

/// Reads one scan. bin-xyzi files are little-endian float32 quadruplets;
/// csv-xyz files carry one "x,y,z" triple per line. Truncated or
/// non-numeric content raises with the file name and offset/line.
RangeScan load_scan(const std::string& path, ScanFormat format);

void save_scan(const RangeScan& scan, const std::string& path, ScanFormat format);

/// Reads poses, one row-major 3x4 [R|t] per line. Rotations with up to 1e-2
/// orthonormality drift are projected back onto the nearest rotation;
/// anything worse is an error.
std::vector<Pose> load_poses(const std::string& path);

void save_poses(const std::vector<Pose>& poses, const std::string& path);

/// Nearest rotation matrix (polar factor) to an arbitrary 3x3 matrix.
Mat3 nearest_rotation(const Mat3& m);

/// Binary terrain map container (see FORMATS.md). Import reproduces the map
/// bit-exactly.
void export_map(const StaticTerrainMap& map, const std::string& path);
StaticTerrainMap import_map(const std::string& path);

/// Binary ground-truth grid container (see FORMATS.md).
void export_ground_truth(const GroundTruthGrid& gt, const std::string& path);
GroundTruthGrid import_ground_truth(const std::string& path);

enum class MapLayer { HMax, HMin, NZ, RStep, RIncl, RColl };

MapLayer layer_from_string(const std::string& name);

/// 256-entry risk color table: yellow over green and blue to purple and black.
std::array<std::uint8_t, 3> risk_color(double risk);

/// Renders one layer to a binary PPM, one pixel per cell, empty cells white.
/// Height layers are min-max normalized to grayscale and the bounds are
/// recorded in <path>.bounds.txt.
void render_layer(const MapSnapshot& snap, MapLayer layer, const std::string& path);

/// Window spanning every populated cell of the map (empty maps yield a
/// one-cell window at the origin).
GridSpec populated_window(const StaticTerrainMap& map);

/// Writes the evaluation report: human-readable text to `text_path` when
/// non-empty and machine-readable key=value lines to `kv_path` when
/// non-empty.
void write_report(const EvalReport& report, const std::string& text_path,
                  const std::string& kv_path);
std::string report_text(const EvalReport& report);
std::string report_keyvalues(const EvalReport& report);

}  // namespace ttmap
