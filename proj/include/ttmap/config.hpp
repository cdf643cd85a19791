#pragma once

#include <cstdint>
#include <string>

#include "ttmap/completion.hpp"
#include "ttmap/eval.hpp"
#include "ttmap/fusion.hpp"
#include "ttmap/projection.hpp"
#include "ttmap/reprojection.hpp"
#include "ttmap/sim.hpp"
#include "ttmap/steppability.hpp"

namespace ttmap {

struct GridParams {
  double resolution = 0.1;
  double extent_x = 6.0;
  double extent_y = 6.0;
};

/// Full pipeline configuration. JSON round-trips exactly; unknown keys are
/// rejected.
struct Config {
  SensorIntrinsics sensor;
  GridParams grid;
  ProjectionParams projection;
  SteppabilityParams steppability;
  ReprojectionParams reprojection;
  CompletionParams completion;
  FusionParams fusion;
  EvalParams eval;
  SimParams sim;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;  // throws on out-of-range values

  /// Confined-course preset: 0.1 m cells, 6 m window, 0.5 m kernel.
  static Config narrow();
  /// Open-area preset: 0.2 m cells, 20 m window, 1.0 m kernel, dynamic gate.
  static Config open();

  static Config from_json(const std::string& text);
  static Config load(const std::string& path);
  std::string to_json(int indent = 2) const;
  void save(const std::string& path) const;
};

bool operator==(const Config& a, const Config& b);

}  // namespace ttmap
