#include "ttmap/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ttmap {

namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (key == k) {
        known = true;
        break;
      }
    }
    if (!known) throw std::runtime_error("config: unknown key '" + key + "' in " + context);
  }
}

void expect_range(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("config: " + what);
}

}  // namespace

void Config::validate() const {
  expect_range(sensor.width >= 2 && sensor.height >= 2, "sensor raster must be at least 2x2");
  expect_range(sensor.fov_up + sensor.fov_down > 0, "vertical field of view must be positive");
  expect_range(sensor.fov_left + sensor.fov_right > 0,
               "horizontal field of view must be positive");
  if (sensor.full_azimuth) {
    expect_range(std::abs(sensor.fov_left + sensor.fov_right - 2.0 * std::numbers::pi) < 1e-9,
                 "full-azimuth sensors need fov_left + fov_right == 2*pi");
  }
  expect_range(grid.resolution > 0, "grid resolution must be positive");
  const double cx = grid.extent_x / grid.resolution;
  const double cy = grid.extent_y / grid.resolution;
  expect_range(cx > 0 && std::abs(cx - std::llround(cx)) < 1e-9,
               "extent_x must be a positive multiple of the resolution");
  expect_range(cy > 0 && std::abs(cy - std::llround(cy)) < 1e-9,
               "extent_y must be a positive multiple of the resolution");
  expect_range(projection.normal_kernel >= 1, "normal_kernel must be >= 1");
  expect_range(projection.min_support >= 1, "min_support must be >= 1");
  expect_range(projection.min_range >= 0, "min_range must be >= 0");
  expect_range(steppability.tau_r > 0 && steppability.tau_r < 1, "tau_r must be in (0,1)");
  expect_range(steppability.risk_kernel >= 1 && steppability.pool_kernel >= 1,
               "risk/pool kernels must be >= 1");
  expect_range(reprojection.platform_height > 0, "platform_height must be positive");
  expect_range(completion.kernel_radius > 0, "kernel_radius must be positive");
  expect_range(completion.tau_h > 0, "tau_h must be positive");
  expect_range(completion.risk_radius >= 0, "risk_radius must be >= 0");
  expect_range(completion.sigma_min > 0, "sigma_min must be positive");
  expect_range(fusion.tau_m > 0, "tau_m must be positive");
  expect_range(fusion.process_var >= 0, "process_var must be >= 0");
  expect_range(fusion.var_init > 0, "var_init must be positive");
  expect_range(fusion.logit_eps > 0 && fusion.logit_eps < 0.5, "logit_eps must be in (0,0.5)");
  expect_range(fusion.tile_size >= 1, "tile_size must be >= 1");
  expect_range(eval.decision_tau > 0 && eval.decision_tau < 1,
               "decision_tau must be in (0,1)");
  expect_range(eval.tolerance >= 0, "eval tolerance must be >= 0");
  expect_range(sim.noise_sigma >= 0, "noise_sigma must be >= 0");
  expect_range(sim.gt_subsamples >= 1, "gt_subsamples must be >= 1");
  expect_range(sim.gt_adjacency == 4 || sim.gt_adjacency == 8, "gt_adjacency must be 4 or 8");
  expect_range(threads >= 1, "threads must be >= 1");
}

Config Config::narrow() { return Config{}; }

Config Config::open() {
  Config c;
  c.grid.resolution = 0.2;
  c.grid.extent_x = 20.0;
  c.grid.extent_y = 20.0;
  c.completion.kernel_radius = 1.0;
  c.fusion.tau_m = 1.0;
  return c;
}

Config Config::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j,
             {"sensor", "grid", "projection", "steppability", "reprojection", "completion",
              "fusion", "eval", "sim", "seed", "threads"},
             "config");
  Config c;
  if (j.contains("sensor")) {
    const auto& s = j.at("sensor");
    check_keys(s, {"width", "height", "fov_up", "fov_down", "fov_left", "fov_right",
                   "full_azimuth"},
               "sensor");
    c.sensor.width = s.value("width", c.sensor.width);
    c.sensor.height = s.value("height", c.sensor.height);
    c.sensor.fov_up = s.value("fov_up", c.sensor.fov_up);
    c.sensor.fov_down = s.value("fov_down", c.sensor.fov_down);
    c.sensor.fov_left = s.value("fov_left", c.sensor.fov_left);
    c.sensor.fov_right = s.value("fov_right", c.sensor.fov_right);
    c.sensor.full_azimuth = s.value("full_azimuth", c.sensor.full_azimuth);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"resolution", "extent"}, "grid");
    c.grid.resolution = g.value("resolution", c.grid.resolution);
    if (g.contains("extent")) {
      const auto& e = g.at("extent");
      if (!e.is_array() || e.size() != 2) {
        throw std::runtime_error("config: grid.extent must be [x_metres, y_metres]");
      }
      c.grid.extent_x = e[0].get<double>();
      c.grid.extent_y = e[1].get<double>();
    }
  }
  if (j.contains("projection")) {
    const auto& p = j.at("projection");
    check_keys(p, {"normal_kernel", "min_support", "min_range"}, "projection");
    c.projection.normal_kernel = p.value("normal_kernel", c.projection.normal_kernel);
    c.projection.min_support = p.value("min_support", c.projection.min_support);
    c.projection.min_range = p.value("min_range", c.projection.min_range);
  }
  if (j.contains("steppability")) {
    const auto& s = j.at("steppability");
    check_keys(s, {"tau_r", "risk_kernel", "pool_kernel", "literal_prox"}, "steppability");
    c.steppability.tau_r = s.value("tau_r", c.steppability.tau_r);
    c.steppability.risk_kernel = s.value("risk_kernel", c.steppability.risk_kernel);
    c.steppability.pool_kernel = s.value("pool_kernel", c.steppability.pool_kernel);
    c.steppability.literal_prox = s.value("literal_prox", c.steppability.literal_prox);
  }
  if (j.contains("reprojection")) {
    const auto& r = j.at("reprojection");
    check_keys(r, {"platform_height"}, "reprojection");
    c.reprojection.platform_height =
        r.value("platform_height", c.reprojection.platform_height);
  }
  if (j.contains("completion")) {
    const auto& q = j.at("completion");
    check_keys(q, {"kernel_radius", "tau_h", "risk_radius", "incl_norm", "sigma_min"},
               "completion");
    c.completion.kernel_radius = q.value("kernel_radius", c.completion.kernel_radius);
    c.completion.tau_h = q.value("tau_h", c.completion.tau_h);
    c.completion.risk_radius = q.value("risk_radius", c.completion.risk_radius);
    c.completion.sigma_min = q.value("sigma_min", c.completion.sigma_min);
    if (q.contains("incl_norm")) {
      const std::string norm = q.at("incl_norm").get<std::string>();
      if (norm == "two_pi") {
        c.completion.incl_norm = InclNorm::TwoPi;
      } else if (norm == "half_pi") {
        c.completion.incl_norm = InclNorm::HalfPi;
      } else {
        throw std::runtime_error("config: incl_norm must be 'two_pi' or 'half_pi'");
      }
    }
  }
  if (j.contains("fusion")) {
    const auto& f = j.at("fusion");
    check_keys(f, {"tau_m", "process_var", "var_init", "scale_h", "scale_o", "sigma_min",
                   "logit_eps", "tile_size"},
               "fusion");
    c.fusion.tau_m = f.value("tau_m", c.fusion.tau_m);
    c.fusion.process_var = f.value("process_var", c.fusion.process_var);
    c.fusion.var_init = f.value("var_init", c.fusion.var_init);
    c.fusion.scale_h = f.value("scale_h", c.fusion.scale_h);
    c.fusion.scale_o = f.value("scale_o", c.fusion.scale_o);
    c.fusion.sigma_min = f.value("sigma_min", c.fusion.sigma_min);
    c.fusion.logit_eps = f.value("logit_eps", c.fusion.logit_eps);
    c.fusion.tile_size = f.value("tile_size", c.fusion.tile_size);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, {"decision_tau", "tolerance"}, "eval");
    c.eval.decision_tau = e.value("decision_tau", c.eval.decision_tau);
    c.eval.tolerance = e.value("tolerance", c.eval.tolerance);
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    check_keys(s, {"noise_sigma", "gt_subsamples", "gt_adjacency"}, "sim");
    c.sim.noise_sigma = s.value("noise_sigma", c.sim.noise_sigma);
    c.sim.gt_subsamples = s.value("gt_subsamples", c.sim.gt_subsamples);
    c.sim.gt_adjacency = s.value("gt_adjacency", c.sim.gt_adjacency);
  }
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string Config::to_json(int indent) const {
  json j;
  j["sensor"] = {{"width", sensor.width},
                 {"height", sensor.height},
                 {"fov_up", sensor.fov_up},
                 {"fov_down", sensor.fov_down},
                 {"fov_left", sensor.fov_left},
                 {"fov_right", sensor.fov_right},
                 {"full_azimuth", sensor.full_azimuth}};
  j["grid"] = {{"resolution", grid.resolution},
               {"extent", {grid.extent_x, grid.extent_y}}};
  j["projection"] = {{"normal_kernel", projection.normal_kernel},
                     {"min_support", projection.min_support},
                     {"min_range", projection.min_range}};
  j["steppability"] = {{"tau_r", steppability.tau_r},
                       {"risk_kernel", steppability.risk_kernel},
                       {"pool_kernel", steppability.pool_kernel},
                       {"literal_prox", steppability.literal_prox}};
  j["reprojection"] = {{"platform_height", reprojection.platform_height}};
  j["completion"] = {{"kernel_radius", completion.kernel_radius},
                     {"tau_h", completion.tau_h},
                     {"risk_radius", completion.risk_radius},
                     {"incl_norm", completion.incl_norm == InclNorm::TwoPi ? "two_pi"
                                                                           : "half_pi"},
                     {"sigma_min", completion.sigma_min}};
  j["fusion"] = {{"tau_m", fusion.tau_m},
                 {"process_var", fusion.process_var},
                 {"var_init", fusion.var_init},
                 {"scale_h", fusion.scale_h},
                 {"scale_o", fusion.scale_o},
                 {"sigma_min", fusion.sigma_min},
                 {"logit_eps", fusion.logit_eps},
                 {"tile_size", fusion.tile_size}};
  j["eval"] = {{"decision_tau", eval.decision_tau}, {"tolerance", eval.tolerance}};
  j["sim"] = {{"noise_sigma", sim.noise_sigma},
              {"gt_subsamples", sim.gt_subsamples},
              {"gt_adjacency", sim.gt_adjacency}};
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump(indent) + "\n";
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << to_json();
}

bool operator==(const Config& a, const Config& b) {
  return a.to_json() == b.to_json();
}

}  // namespace ttmap
