// Command-line front end: scene simulation, mapping, evaluation, rendering
// and benchmarking over the documented file formats (see FORMATS.md).

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "ttmap/io.hpp"
#include "ttmap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ttmap;

namespace {

Config load_config_or_default(const std::string& path) {
  if (path.empty()) return Config::narrow();
  return Config::load(path);
}

std::string scan_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

GridSpec gt_spec_for(const Scene& scene, const Config& config) {
  if (!scene.gt_region) {
    throw std::runtime_error("scene has no gt_region; cannot build ground truth");
  }
  const auto& r = *scene.gt_region;
  GridSpec spec;
  spec.resolution = config.grid.resolution;
  spec.origin_x = std::floor(r[0] / spec.resolution) * spec.resolution;
  spec.origin_y = std::floor(r[1] / spec.resolution) * spec.resolution;
  spec.extent_x = std::ceil((r[2] - spec.origin_x) / spec.resolution) * spec.resolution;
  spec.extent_y = std::ceil((r[3] - spec.origin_y) / spec.resolution) * spec.resolution;
  return spec;
}

int run_simulate(const std::string& scene_path, const std::string& config_path,
                 const std::string& out_dir, const std::string& format_name,
                 std::uint64_t seed_override, bool has_seed) {
  Config config = load_config_or_default(config_path);
  if (has_seed) config.seed = seed_override;
  const Scene scene = load_scene_file(scene_path);
  if (scene.trajectory.waypoints.empty()) {
    throw std::runtime_error("scene has no trajectory; nothing to simulate");
  }
  const ScanFormat format = scan_format_from_string(format_name);

  fs::create_directories(out_dir);
  const fs::path scans_dir = fs::path(out_dir) / "scans";
  fs::create_directories(scans_dir);

  const std::vector<double> times = scene.trajectory.scan_times();
  std::vector<Pose> poses;
  poses.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Pose pose = scene.trajectory.pose_at(times[i]);
    const RangeScan scan = raycast_scan(scene, pose, config.sensor, times[i],
                                        config.sim.noise_sigma, config.seed, i,
                                        config.threads);
    const std::string ext = format == ScanFormat::BinXYZI ? ".bin" : ".csv";
    save_scan(scan, (scans_dir / (scan_name(static_cast<int>(i)) + ext)).string(), format);
    poses.push_back(pose);
  }
  save_poses(poses, (fs::path(out_dir) / "poses.txt").string());

  const GroundTruthGrid gt = ground_truth(scene, gt_spec_for(scene, config),
                                          config.completion.tau_h, config.sim.gt_subsamples,
                                          config.sim.gt_adjacency);
  export_ground_truth(gt, (fs::path(out_dir) / "ground_truth.ttgt").string());
  std::cout << "wrote " << times.size() << " scans, poses.txt and ground_truth.ttgt to "
            << out_dir << "\n";
  return 0;
}

struct TimingSummary {
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

TimingSummary summarize(std::vector<double> values) {
  TimingSummary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  std::sort(values.begin(), values.end());
  s.p50 = values[values.size() / 2];
  s.p95 = values[static_cast<std::size_t>(0.95 * (values.size() - 1))];
  s.max = values.back();
  return s;
}

void print_timings(const std::vector<StageTimes>& timings, std::ostream& out) {
  const auto collect = [&](auto member) {
    std::vector<double> v;
    v.reserve(timings.size());
    for (const auto& t : timings) v.push_back(member(t));
    return v;
  };
  const auto row = [&](const char* name, const TimingSummary& s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-12s mean %8.3f  p50 %8.3f  p95 %8.3f  max %8.3f\n",
                  name, s.mean, s.p50, s.p95, s.max);
    out << buf;
  };
  out << "per-scan stage timings [ms] over " << timings.size() << " scans\n";
  row("projection", summarize(collect([](const StageTimes& t) { return t.projection_ms; })));
  row("steppability",
      summarize(collect([](const StageTimes& t) { return t.steppability_ms; })));
  row("reprojection",
      summarize(collect([](const StageTimes& t) { return t.reprojection_ms; })));
  row("completion", summarize(collect([](const StageTimes& t) { return t.completion_ms; })));
  row("local", summarize(collect([](const StageTimes& t) { return t.local_ms(); })));
  row("update", summarize(collect([](const StageTimes& t) { return t.fusion_ms; })));
  row("total", summarize(collect([](const StageTimes& t) { return t.total_ms(); })));
}

PipelineResult run_map(const Config& config, const std::string& scans_dir,
                       const std::string& poses_path, const std::string& format_name,
                       Ablation ablation) {
  const ScanFormat format = scan_format_from_string(format_name);
  const std::vector<std::string> files = list_scan_files(scans_dir, format);
  const std::vector<Pose> poses = load_poses(poses_path);
  if (files.size() != poses.size()) {
    throw std::runtime_error("scan count (" + std::to_string(files.size()) +
                             ") does not match pose count (" + std::to_string(poses.size()) +
                             ")");
  }
  std::size_t next = 0;
  // I/O happens inside the source callback, outside the stage timers.
  const ScanSource source = [&](RangeScan& scan, Pose& pose) {
    if (next >= files.size()) return false;
    scan = load_scan(files[next], format);
    scan.timestamp = static_cast<std::int64_t>(next);
    pose = poses[next];
    ++next;
    return true;
  };
  return run_pipeline(config, source, ablation);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terrain traversability mapping pipeline"};
  app.require_subcommand(1);

  std::string config_path, scene_path, scans_dir, poses_path, out_path, format_name = "bin-xyzi";
  std::string map_path, gt_path, layer_name = "r_coll", ablate_name;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
  int repeat = 1;
  double budget_ms = 50.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline configuration JSON");
    cmd->add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) {
      has_seed = true;
    });
    cmd->add_option("--threads", threads, "worker threads (overrides config)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "ray-cast a scene into scans + poses + ground truth");
  simulate->add_option("--scene", scene_path, "scene JSON")->required();
  simulate->add_option("--out", out_path, "output directory")->required();
  simulate->add_option("--format", format_name, "scan format: bin-xyzi | csv-xyz");
  add_common(simulate);

  CLI::App* map_cmd = app.add_subcommand("map", "run the mapping pipeline over scans + poses");
  map_cmd->add_option("--scans", scans_dir, "scan directory")->required();
  map_cmd->add_option("--poses", poses_path, "pose file")->required();
  map_cmd->add_option("--out", out_path, "output map file")->required();
  map_cmd->add_option("--format", format_name, "scan format: bin-xyzi | csv-xyz");
  map_cmd->add_option("--timings", map_path, "write the timing table to this file");
  map_cmd->add_option("--ablate", ablate_name, "no-gate | vanilla-bgk | no-pool");
  add_common(map_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "score a map against ground truth");
  eval_cmd->add_option("--map", map_path, "terrain map file")->required();
  eval_cmd->add_option("--gt", gt_path, "ground truth file")->required();
  eval_cmd->add_option("--out", out_path, "report basename (.txt and .kv)");
  add_common(eval_cmd);

  CLI::App* render_cmd = app.add_subcommand("render", "render one map layer to a PPM image");
  render_cmd->add_option("--map", map_path, "terrain map file")->required();
  render_cmd->add_option("--layer", layer_name, "h_max | h_min | n_z | r_step | r_incl | r_coll");
  render_cmd->add_option("--out", out_path, "output image (.ppm)")->required();
  add_common(render_cmd);

  CLI::App* bench_cmd = app.add_subcommand("bench", "repeat the mapping run and report stage timings");
  bench_cmd->add_option("--scans", scans_dir, "scan directory")->required();
  bench_cmd->add_option("--poses", poses_path, "pose file")->required();
  bench_cmd->add_option("--format", format_name, "scan format: bin-xyzi | csv-xyz");
  bench_cmd->add_option("--repeat", repeat, "number of full runs");
  bench_cmd->add_option("--budget-ms", budget_ms, "per-scan total budget to compare against");
  bench_cmd->add_option("--ablate", ablate_name, "no-gate | vanilla-bgk | no-pool");
  add_common(bench_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return run_simulate(scene_path, config_path, out_path, format_name, seed, has_seed);
    }

    Config config = load_config_or_default(config_path);
    if (has_seed) config.seed = seed;
    if (threads > 0) config.threads = threads;
    const Ablation ablation = ablation_from_string(ablate_name);

    if (map_cmd->parsed()) {
      const PipelineResult result =
          run_map(config, scans_dir, poses_path, format_name, ablation);
      export_map(result.map, out_path);
      std::cout << "map with " << result.map.cell_count() << " cells written to " << out_path
                << "\n";
      if (!map_path.empty()) {
        std::ofstream timing_out(map_path);
        print_timings(result.timings, timing_out);
      } else {
        print_timings(result.timings, std::cout);
      }
      return 0;
    }
    if (eval_cmd->parsed()) {
      const StaticTerrainMap map = import_map(map_path);
      const GroundTruthGrid gt = import_ground_truth(gt_path);
      const MapSnapshot snap = snapshot(map, gt.spec);
      const EvalReport report = evaluate(snap, gt, config.eval);
      std::cout << report_text(report);
      if (!out_path.empty()) {
        write_report(report, out_path + ".txt", out_path + ".kv");
      }
      return report.valid ? 0 : 2;
    }
    if (render_cmd->parsed()) {
      const StaticTerrainMap map = import_map(map_path);
      const MapSnapshot snap = snapshot(map, populated_window(map));
      render_layer(snap, layer_from_string(layer_name), out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (bench_cmd->parsed()) {
      std::vector<StageTimes> all;
      for (int i = 0; i < repeat; ++i) {
        const PipelineResult result =
            run_map(config, scans_dir, poses_path, format_name, ablation);
        all.insert(all.end(), result.timings.begin(), result.timings.end());
      }
      print_timings(all, std::cout);
      std::vector<double> totals;
      totals.reserve(all.size());
      for (const auto& t : all) totals.push_back(t.total_ms());
      const TimingSummary s = summarize(totals);
      std::cout << "budget: " << budget_ms << " ms/scan total; measured mean " << s.mean
                << " ms -> " << (s.mean <= budget_ms ? "within" : "over") << " budget\n";
      return s.mean <= budget_ms ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
