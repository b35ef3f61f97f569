// Copyright 2026 The Pigeon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pigeon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pigeon/errors.hpp"

namespace pigeon::sim {

using mapping::CellState;
using mapping::CostMap;
using mapping::GridMap;
using planner::Action;

const char* to_string(HeightBand b) {
  switch (b) {
    case HeightBand::Floor:
      return "floor";
    case HeightBand::Mid:
      return "mid";
    case HeightBand::High:
      return "high";
  }
  return "?";
}

bool Scene::is_goal(const SceneObject& o) const {
  return std::find(goal_categories.begin(), goal_categories.end(), o.category) != goal_categories.end();
}

const SceneObject* Scene::find_object(int id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw SceneSchemaError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SceneSchemaError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? field<T>(j, key, where) : fallback;
}

HeightBand parse_band(const std::string& s) {
  if (s == "floor") return HeightBand::Floor;
  if (s == "mid") return HeightBand::Mid;
  if (s == "high") return HeightBand::High;
  throw SceneSchemaError("unknown height_band '" + s + "'");
}

}  // namespace

Scene parse_scene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneParseError(std::string("scene is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SceneSchemaError("scene document must be an object");
  const auto version = field<std::string>(doc, "version", "scene");
  if (version != "scene/1") throw SceneSchemaError("unsupported scene version '" + version + "'");

  Scene scene;
  scene.name = field<std::string>(doc, "name", "scene");
  const double resolution = field_or<double>(doc, "resolution", 0.1, "scene");
  const double cell_size = field_or<double>(doc, "cell_size", resolution, "scene");
  if (resolution <= 0.0 || cell_size <= 0.0) throw SceneSchemaError("resolution and cell_size must be positive");
  const double ratio = cell_size / resolution;
  const int k = static_cast<int>(std::lround(ratio));
  if (k < 1 || std::abs(ratio - k) > 1e-6) throw SceneSchemaError("cell_size must be a multiple of resolution");

  const auto art = field<std::vector<std::string>>(doc, "map", "scene");
  if (art.empty() || art.front().empty()) throw SceneSchemaError("map must have at least one row");
  const std::size_t cols = art.front().size();
  for (const auto& line : art)
    if (line.size() != cols) throw SceneSchemaError("map rows must all have the same width");

  mapping::GridGeometry g{resolution, {0.0, 0.0}, static_cast<int>(cols) * k, static_cast<int>(art.size()) * k};
  scene.truth = GridMap(g, CellState::Free);
  for (std::size_t r = 0; r < art.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const char ch = art[r][c];
      if (ch != '#' && ch != '.') throw SceneSchemaError(std::string("unknown map character '") + ch + "'");
      if (ch == '#')
        for (int dr = 0; dr < k; ++dr)
          for (int dc = 0; dc < k; ++dc)
            scene.truth.set({static_cast<int>(c) * k + dc, static_cast<int>(r) * k + dr}, CellState::Occupied);
    }
  }

  const auto& start = doc.contains("start") ? doc.at("start") : throw SceneSchemaError("scene: missing field 'start'");
  scene.start.x = field<double>(start, "x", "start");
  scene.start.y = field<double>(start, "y", "start");
  scene.start.heading = normalize_heading(deg_to_rad(field_or<double>(start, "heading_deg", 0.0, "start")));

  scene.goal_categories = field<std::vector<std::string>>(doc, "goal_categories", "scene");
  if (scene.goal_categories.empty()) throw SceneSchemaError("goal_categories must not be empty");
  scene.success_radius = field_or<double>(doc, "success_radius", 1.0, "scene");
  scene.max_steps = field_or<int>(doc, "max_steps", 500, "scene");
  if (scene.success_radius <= 0.0 || scene.max_steps <= 0)
    throw SceneSchemaError("success_radius and max_steps must be positive");

  if (doc.contains("objects")) {
    if (!doc.at("objects").is_array()) throw SceneSchemaError("objects must be an array");
    for (const auto& jo : doc.at("objects")) {
      SceneObject o;
      const std::string where = "object";
      o.id = field<int>(jo, "id", where);
      o.category = field<std::string>(jo, "category", where);
      o.visual_label = field_or<std::string>(jo, "visual_label", o.category, where);
      o.centroid = {field<double>(jo, "x", where), field<double>(jo, "y", where)};
      const auto size = field_or<std::vector<double>>(jo, "size", {0.4, 0.4}, where);
      if (size.size() != 2 || size[0] <= 0.0 || size[1] <= 0.0)
        throw SceneSchemaError("object size must be two positive numbers");
      o.size = {size[0], size[1]};
      o.base_confidence = field_or<double>(jo, "base_confidence", 0.8, where);
      if (o.base_confidence < 0.0 || o.base_confidence > 1.0)
        throw SceneSchemaError("base_confidence must lie in [0, 1]");
      o.height_band = parse_band(field_or<std::string>(jo, "height_band", "mid", where));
      o.solid = field_or<bool>(jo, "solid", true, where);
      if (scene.find_object(o.id)) throw SceneSchemaError("duplicate object id " + std::to_string(o.id));
      for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
          const Point2 w = g.world_of({c, r});
          if (std::abs(w.x - o.centroid.x) <= o.size.x / 2 && std::abs(w.y - o.centroid.y) <= o.size.y / 2)
            o.footprint.push_back({c, r});
        }
      }
      if (o.footprint.empty()) throw SceneSchemaError("object " + std::to_string(o.id) + " has an empty footprint");
      if (o.solid)
        for (Cell c : o.footprint) scene.truth.set(c, CellState::Occupied);
      scene.objects.push_back(std::move(o));
    }
  }

  const Cell sc = g.cell_of(scene.start.position());
  if (!g.in_bounds(sc) || scene.truth.at(sc) != CellState::Free)
    throw SceneStartBlockedError("scene '" + scene.name + "': start is not on free floor");
  for (const auto& cat : scene.goal_categories)
    if (std::none_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) { return o.category == cat; }))
      throw SceneSchemaError("goal category '" + cat + "' has no object in the scene");
  const DistanceOracle oracle(scene, scene.goal_categories);
  if (!std::isfinite(oracle.distance(scene.start.position())))
    throw UnreachableGoalError("scene '" + scene.name + "': no goal object is reachable from the start");
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw NotFoundError("cannot open scene file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scene(ss.str());
}

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

CostMap truth_costmap(const Scene& scene) {
  const auto& g = scene.truth.geometry();
  CostMap cm(g, 1.0);
  for (int i = 0; i < g.size(); ++i)
    if (scene.truth.at(i) == CellState::Occupied) cm.set(g.cell_at(i), CostMap::kImpassable);
  return cm;
}

DistanceOracle::DistanceOracle(const Scene& scene, const std::vector<std::string>& categories) : scene_(&scene) {
  std::vector<Cell> sources;
  for (const auto& o : scene.objects)
    if (std::find(categories.begin(), categories.end(), o.category) != categories.end())
      sources.insert(sources.end(), o.footprint.begin(), o.footprint.end());
  field_ = planner::geodesic_field(truth_costmap(scene), sources);
}

double DistanceOracle::distance(Point2 from) const {
  const auto& g = scene_->truth.geometry();
  const Cell c = g.cell_of(from);
  if (!g.in_bounds(c) || scene_->truth.at(c) != CellState::Free)
    throw StartBlockedError("distance query from a cell that is not free floor");
  return field_[g.index(c)] * g.resolution;
}

double oracle_distance(const Scene& scene, Point2 from, const std::vector<std::string>& categories) {
  return DistanceOracle(scene, categories).distance(from);
}

double raycast(const GridMap& truth, Point2 origin, double angle, double max_range) {
  const auto& g = truth.geometry();
  const double ux = (origin.x - g.origin.x) / g.resolution;
  const double uy = (origin.y - g.origin.y) / g.resolution;
  Cell cur{static_cast<int>(std::floor(ux)), static_cast<int>(std::floor(uy))};
  if (!g.in_bounds(cur) || truth.at(cur) == CellState::Occupied) return 0.0;
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double tx = sx > 0 ? (cur.col + 1 - ux) / dx : (sx < 0 ? (ux - cur.col) / -dx : kInf);
  double ty = sy > 0 ? (cur.row + 1 - uy) / dy : (sy < 0 ? (uy - cur.row) / -dy : kInf);
  const double dtx = sx != 0 ? 1.0 / std::abs(dx) : kInf;
  const double dty = sy != 0 ? 1.0 / std::abs(dy) : kInf;
  const double limit = max_range / g.resolution;
  const auto blocked = [&](Cell c) { return !g.in_bounds(c) || truth.at(c) == CellState::Occupied; };

  while (true) {
    const double t = std::min(tx, ty);
    if (t > limit) return max_range;
    if (tx < ty) {
      cur.col += sx;
      tx += dtx;
    } else if (ty < tx) {
      cur.row += sy;
      ty += dty;
    } else {
      if (blocked({cur.col + sx, cur.row}) || blocked({cur.col, cur.row + sy})) return t * g.resolution;
      cur.col += sx;
      cur.row += sy;
      tx += dtx;
      ty += dty;
    }
    if (blocked(cur)) return t * g.resolution;
  }
}

namespace {

bool footprint_visible(const Scene& scene, const SceneObject& object, const Pose& pose, double fov, double max_range) {
  const auto& g = scene.truth.geometry();
  const Cell agent = g.cell_of(pose.position());
  const bool full = fov >= kTwoPi - 1e-12;
  for (Cell c : object.footprint) {
    const Point2 w = g.world_of(c);
    if (distance(w, pose.position()) > max_range) continue;
    if (!full && std::abs(wrap_angle(std::atan2(w.y - pose.y, w.x - pose.x) - pose.heading)) > fov / 2 + 1e-12)
      continue;
    const auto line = mapping::bresenham_line(agent, c);
    bool clear = true;
    for (std::size_t k = 1; k + 1 < line.size(); ++k) {
      const Cell l = line[k];
      if (scene.truth.at(l) != CellState::Occupied) continue;
      if (std::find(object.footprint.begin(), object.footprint.end(), l) != object.footprint.end()) continue;
      clear = false;
      break;
    }
    if (clear) return true;
  }
  return false;
}

}  // namespace

bool object_in_view(const Scene& scene, const SceneObject& object, const Pose& pose, double fov, double max_range) {
  return footprint_visible(scene, object, pose, fov, max_range);
}

Simulator::Simulator(const Scene& scene, SimParams params, std::uint64_t seed)
    : scene_(&scene),
      params_(params),
      sensor_rng_(make_stream(seed, "sim")),
      detector_rng_(make_stream(seed, "detector")) {
  state_.pose = scene.start;
}

mapping::DepthScan Simulator::sense_scan() {
  const auto& sp = params_.sensor;
  mapping::DepthScan scan;
  scan.pose = state_.pose;
  scan.fov = sp.fov;
  scan.max_range = sp.max_range;
  scan.beam_angles.reserve(sp.beams);
  scan.ranges.reserve(sp.beams);
  std::normal_distribution<double> noise(0.0, sp.range_noise > 0.0 ? sp.range_noise : 1.0);
  for (int i = 0; i < sp.beams; ++i) {
    const double rel = -sp.fov / 2 + (i + 0.5) * sp.fov / sp.beams;
    double r = raycast(scene_->truth, state_.pose.position(), state_.pose.heading + rel, sp.max_range);
    if (sp.range_noise > 0.0 && r < sp.max_range) r = std::clamp(r + noise(sensor_rng_), 0.0, sp.max_range);
    scan.beam_angles.push_back(rel);
    scan.ranges.push_back(r);
  }
  return scan;
}

std::vector<Detection> Simulator::sense_detect() {
  const auto& dp = params_.detector;
  std::vector<Detection> out;
  std::normal_distribution<double> noise(0.0, dp.confidence_noise > 0.0 ? dp.confidence_noise : 1.0);
  const Pose& pose = state_.pose;
  for (const auto& o : scene_->objects) {
    const double d = distance(o.centroid, pose.position());
    if (o.height_band == HeightBand::Floor && d < dp.floor_near && pose.pitch >= 0.0) continue;
    if (o.height_band == HeightBand::High && d < dp.high_near && pose.pitch <= 0.0) continue;
    if (!footprint_visible(*scene_, o, pose, dp.fov, dp.max_range)) continue;
    Detection det;
    det.object_id = o.id;
    det.label = o.visual_label;
    det.confidence = o.base_confidence;
    if (dp.confidence_noise > 0.0) det.confidence = std::clamp(det.confidence + noise(detector_rng_), 0.0, 1.0);
    det.bearing = normalize_heading(std::atan2(o.centroid.y - pose.y, o.centroid.x - pose.x));
    det.range = d;
    out.push_back(std::move(det));
  }
  return out;
}

Observation Simulator::observe() {
  Observation obs;
  obs.scan = sense_scan();
  obs.detections = sense_detect();
  obs.pose = state_.pose;
  return obs;
}

namespace {

double snap_heading(double h) {
  h = normalize_heading(h);
  const double quantum = planner::kTurnAngle;
  const double k = std::round(h / quantum);
  if (std::abs(h - k * quantum) < 1e-9) h = normalize_heading(k * quantum);
  return h;
}

}  // namespace

Observation Simulator::step(Action action) {
  if (state_.stopped || state_.timed_out) throw ContractViolation("action issued after the episode ended");
  state_.collision = false;
  Pose& p = state_.pose;
  switch (action) {
    case Action::Forward: {
      const Point2 next{p.x + planner::kForwardStep * std::cos(p.heading),
                        p.y + planner::kForwardStep * std::sin(p.heading)};
      const auto& g = scene_->truth.geometry();
      const auto swept = mapping::trace_ray(g, p.position(), next);
      bool blocked = swept.empty() || swept.back() != g.cell_of(next);
      for (Cell c : swept) blocked = blocked || scene_->truth.at(c) == CellState::Occupied;
      if (blocked) {
        state_.collision = true;
      } else {
        p.x = next.x;
        p.y = next.y;
        state_.path_length += planner::kForwardStep;
      }
      break;
    }
    case Action::TurnLeft:
      p.heading = snap_heading(p.heading + planner::kTurnAngle);
      break;
    case Action::TurnRight:
      p.heading = snap_heading(p.heading - planner::kTurnAngle);
      break;
    case Action::LookUp:
      p.pitch = std::min(p.pitch + planner::kTiltAngle, planner::kTiltAngle);
      if (std::abs(p.pitch) < 1e-12) p.pitch = 0.0;
      break;
    case Action::LookDown:
      p.pitch = std::max(p.pitch - planner::kTiltAngle, -planner::kTiltAngle);
      if (std::abs(p.pitch) < 1e-12) p.pitch = 0.0;
      break;
    case Action::Stop:
      state_.stopped = true;
      break;
  }
  ++state_.step;
  Observation obs = observe();
  state_.log.push_back({state_.step, action, p, state_.collision, static_cast<int>(obs.detections.size())});
  return obs;
}

void Simulator::force_timeout() { state_.timed_out = true; }

SuccessCheck check_success(const Scene& scene, const EpisodeState& state, const DistanceOracle& oracle) {
  if (!state.stopped && !state.timed_out) throw ContractViolation("success checked before the episode ended");
  SuccessCheck out;
  out.distance = oracle.distance(state.pose.position());
  out.success = state.stopped && !state.timed_out && out.distance <= scene.success_radius;
  return out;
}

namespace {

Rgb category_color(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 16777619u;
  }
  return {static_cast<std::uint8_t>(60 + (h & 0x7f)), static_cast<std::uint8_t>(60 + ((h >> 8) & 0x7f)),
          static_cast<std::uint8_t>(60 + ((h >> 16) & 0x7f))};
}

Rgb shade(Rgb c, double f) {
  const auto s = [&](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v * f, 0.0, 255.0)); };
  return {s(c.r), s(c.g), s(c.b)};
}

constexpr double kWallHeight = 2.5;
constexpr Rgb kCeiling{232, 232, 238};
constexpr Rgb kFloor{196, 186, 164};
constexpr Rgb kWall{150, 160, 178};

std::pair<double, double> band_heights(HeightBand b) {
  switch (b) {
    case HeightBand::Floor:
      return {0.0, 0.6};
    case HeightBand::Mid:
      return {0.3, 1.2};
    case HeightBand::High:
      return {1.3, 2.1};
  }
  return {0.0, 1.0};
}

}  // namespace

Image Simulator::render(const Pose& pose) const {
  const auto& k = params_.camera;
  Image img(k.width, k.height, kCeiling);
  const double far = 30.0;
  std::vector<double> wall_dist(k.width);

  // Elevation of the ray through row v, relative to the horizontal plane.
  std::vector<double> row_tan(k.height);
  for (int v = 0; v < k.height; ++v) row_tan[v] = std::tan(pose.pitch - std::atan((v - k.cy) / k.fy));

  for (int u = 0; u < k.width; ++u) {
    const double offset = std::atan((u - k.cx) / k.fx);
    const double angle = pose.heading - offset;
    const double d = raycast(scene_->truth, pose.position(), angle, far);
    wall_dist[u] = d;
    const double f = std::clamp(1.1 - d / 12.0, 0.35, 1.0);
    for (int v = 0; v < k.height; ++v) {
      const double h = kCameraHeight + d * row_tan[v];
      if (h < 0.0) {
        img.set(u, v, shade(kFloor, std::clamp(1.0 - 0.05 * (kCameraHeight / std::max(-row_tan[v], 1e-6)), 0.6, 1.0)));
      } else if (h <= kWallHeight) {
        img.set(u, v, shade(kWall, f));
      }
    }
  }

  // Objects as billboards, far to near.
  std::vector<const SceneObject*> order;
  for (const auto& o : scene_->objects) order.push_back(&o);
  std::sort(order.begin(), order.end(), [&](const SceneObject* a, const SceneObject* b) {
    return distance(a->centroid, pose.position()) > distance(b->centroid, pose.position());
  });
  for (const SceneObject* o : order) {
    const double d = distance(o->centroid, pose.position());
    const double rel = wrap_angle(std::atan2(o->centroid.y - pose.y, o->centroid.x - pose.x) - pose.heading);
    if (std::abs(rel) >= kPi / 2 || d < 1e-6) continue;
    if (!footprint_visible(*scene_, *o, pose, kTwoPi, far)) continue;
    const double half = std::atan(std::max(o->size.x, o->size.y) / 2 / d);
    const int u0 = static_cast<int>(std::floor(k.cx + k.fx * std::tan(-(rel + half))));
    const int u1 = static_cast<int>(std::ceil(k.cx + k.fx * std::tan(-(rel - half))));
    const auto [lo, hi] = band_heights(o->height_band);
    const Rgb color = category_color(o->visual_label);
    int top = k.height;
    for (int u = std::max(u0, 0); u <= std::min(u1, k.width - 1); ++u) {
      if (wall_dist[u] + 0.3 < d) continue;
      for (int v = 0; v < k.height; ++v) {
        const double h = kCameraHeight + d * row_tan[v];
        if (h >= lo && h <= hi) {
          img.set(u, v, color);
          top = std::min(top, v);
        }
      }
    }
    if (top < k.height) {
      const int w = text_width(o->visual_label);
      const int x = std::clamp((u0 + u1) / 2 - w / 2, 0, std::max(0, k.width - w));
      draw_text(img, x, std::max(0, top - kGlyphHeight - 2), o->visual_label, Rgb{20, 20, 20});
    }
  }
  return img;
}

}  // namespace pigeon::sim
