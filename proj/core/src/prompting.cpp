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

#include "pigeon/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pigeon/errors.hpp"

namespace pigeon::prompting {

namespace {

constexpr Rgb kMarkerFill{255, 221, 0};
constexpr Rgb kMarkerEdge{0, 0, 0};

void draw_marker(Image& img, const Marker& m) {
  const int r = kMarkerRadius;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int d2 = dx * dx + dy * dy;
      if (d2 > r * r) continue;
      img.put(m.x + dx, m.y + dy, d2 >= (r - 2) * (r - 2) ? kMarkerEdge : kMarkerFill);
    }
  }
  const std::string label = std::to_string(m.number);
  draw_text(img, m.x - text_width(label) / 2, m.y - kGlyphHeight / 2, label, kMarkerEdge);
}

bool overlaps_any(const std::vector<Marker>& placed, int x, int y) {
  return std::any_of(placed.begin(), placed.end(), [&](const Marker& p) {
    const double d = std::hypot(p.x - x, p.y - y);
    return d < kMarkerDiameter;
  });
}

}  // namespace

AnnotatedSnapshot annotate(const SnapshotRef& snapshot, const std::vector<Marker>& markers) {
  if (!snapshot) throw InvalidInputError("cannot annotate a missing snapshot");
  AnnotatedSnapshot out;
  out.base = snapshot;
  out.image = snapshot->image;
  const int w = out.image.width();
  const int h = out.image.height();
  for (const Marker& m : markers) {
    const int x = std::clamp(m.x, 0, w - 1);
    const int y0 = std::clamp(m.y, 0, h - 1);
    int y = y0;
    for (int k = 1; overlaps_any(out.markers, x, y) && k <= 2 * h / kMarkerDiameter + 2; ++k) {
      if (y0 + k * kMarkerDiameter < h && !overlaps_any(out.markers, x, y0 + k * kMarkerDiameter)) {
        y = y0 + k * kMarkerDiameter;
        break;
      }
      if (y0 - k * kMarkerDiameter >= 0 && !overlaps_any(out.markers, x, y0 - k * kMarkerDiameter)) {
        y = y0 - k * kMarkerDiameter;
        break;
      }
    }
    out.markers.push_back({m.number, x, y});
  }
  for (const Marker& m : out.markers) draw_marker(out.image, m);
  return out;
}

Marker marker_for(const CameraIntrinsics& k, const poi::PoI& poi, int number) {
  const auto e = CameraExtrinsics::from_pose(poi.extrinsics, kCameraHeight);
  const auto px = project(k, e, {poi.pose.x, poi.pose.y, 0.0});
  if (!px) {
    const double rel = wrap_angle(std::atan2(poi.pose.y - poi.extrinsics.y, poi.pose.x - poi.extrinsics.x) -
                                  poi.extrinsics.heading);
    return {number, rel > 0 ? 0 : k.width - 1, k.height - 1};
  }
  const auto [u, v] = clamp_to_image(k, px->u, px->v);
  return {number, u, v};
}

PromptTemplate PromptTemplate::defaults() {
  PromptTemplate t;
  t.decision =
      "You are guiding a robot that is searching for a {goal}.\n"
      "The images come from the robot's memory. Numbered circular markers show the {n} places the robot "
      "can go next. Images come in pairs: a view with markers, followed by an older view of the same area "
      "when one exists.\n"
      "Pick the numbered place from which the robot is most likely to reach a {goal} quickly.\n"
      "If the images do not give enough information, answer 0 and the robot will turn around in place "
      "to look before asking again.\n"
      "End your reply with a final line of the form ANSWER: k, where k is a number from 0 to {n}.";
  t.confirmation =
      "The robot is searching for a {goal}. Look at the object in the center of the image(s).\n"
      "Is it really a {goal}? Answer yes, no, or unsure.\n"
      "End your reply with a final line of the form ANSWER: yes, ANSWER: no, or ANSWER: unsure.";
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& dir) {
  PromptTemplate t = defaults();
  const auto read = [](const std::filesystem::path& p, std::string& into) {
    std::ifstream f(p);
    if (!f) return;
    std::stringstream ss;
    ss << f.rdbuf();
    into = ss.str();
    while (!into.empty() && (into.back() == '\n' || into.back() == '\r')) into.pop_back();
  };
  read(dir / "decision.txt", t.decision);
  read(dir / "confirmation.txt", t.confirmation);
  return t;
}

std::string fill_template(const std::string& text, const std::string& goal, int n) {
  std::string out;
  out.reserve(text.size() + 32);
  for (std::size_t i = 0; i < text.size();) {
    if (text.compare(i, 6, "{goal}") == 0) {
      out += goal;
      i += 6;
    } else if (text.compare(i, 3, "{n}") == 0) {
      out += std::to_string(n);
      i += 3;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

std::optional<int> DecisionPrompt::poi_for(int number) const {
  if (number < 1 || number > static_cast<int>(marker_map.size())) return std::nullopt;
  return marker_map[number - 1];
}

DecisionPrompt assemble_decision_prompt(const poi::CandidateSet& cands, const std::string& goal,
                                        const PromptTemplate& tmpl, const CameraIntrinsics& k, const Pose& agent) {
  if (cands.candidates.empty()) throw InvalidInputError("decision prompt needs at least one candidate");
  DecisionPrompt prompt;
  prompt.n_choices = static_cast<int>(cands.candidates.size());
  for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
    const auto& c = cands.candidates[i];
    prompt.marker_map.push_back(c.id);
    const double bearing = wrap_angle(std::atan2(c.pose.y - agent.y, c.pose.x - agent.x) - agent.heading);
    prompt.candidates.push_back({static_cast<int>(i) + 1, c.id, c.kind, bearing});
  }

  auto views = cands.views;
  if (views.empty()) views = poi::group_views(cands.candidates, poi::PoIStore{});
  for (const auto& v : views) {
    std::vector<Marker> markers;
    for (std::size_t idx : v.candidate_indices)
      markers.push_back(marker_for(k, cands.candidates[idx], static_cast<int>(idx) + 1));
    SnapshotRef base = v.snapshot;
    if (!base) {
      auto blank = std::make_shared<Snapshot>();
      blank->id = -1;
      blank->image = Image(k.width, k.height, Rgb{128, 128, 128});
      base = blank;
    }
    ImagePair pair;
    pair.view = annotate(base, markers);
    if (v.context) pair.context = v.context->snapshot;
    prompt.pairs.push_back(std::move(pair));
  }
  prompt.instruction = fill_template(tmpl.decision, goal, prompt.n_choices);
  return prompt;
}

ConfirmationPrompt assemble_confirmation_prompt(std::vector<SnapshotRef> images, const std::string& goal,
                                                const PromptTemplate& tmpl) {
  images.erase(std::remove(images.begin(), images.end(), nullptr), images.end());
  if (images.empty()) throw InvalidInputError("confirmation prompt needs at least one image");
  std::stable_sort(images.begin(), images.end(), [](const SnapshotRef& a, const SnapshotRef& b) {
    return a->capture_step < b->capture_step;
  });
  ConfirmationPrompt p;
  p.images = std::move(images);
  p.instruction = fill_template(tmpl.confirmation, goal, static_cast<int>(p.images.size()));
  return p;
}

std::string prompt_manifest(const DecisionPrompt& prompt) {
  using nlohmann::ordered_json;
  ordered_json images = ordered_json::array();
  for (std::size_t i = 0; i < prompt.pairs.size(); ++i) {
    const auto& pair = prompt.pairs[i];
    ordered_json markers = ordered_json::array();
    for (const auto& m : pair.view.markers) markers.push_back({{"number", m.number}, {"x", m.x}, {"y", m.y}});
    images.push_back({{"file", "view_" + std::to_string(i + 1) + ".png"}, {"role", "view"}, {"markers", markers}});
    if (pair.context)
      images.push_back({{"file", "context_" + std::to_string(i + 1) + ".png"}, {"role", "context"}});
  }
  ordered_json marker_map = ordered_json::object();
  for (std::size_t i = 0; i < prompt.marker_map.size(); ++i) marker_map[std::to_string(i + 1)] = prompt.marker_map[i];
  ordered_json candidates = ordered_json::array();
  for (const auto& c : prompt.candidates)
    candidates.push_back(
        {{"number", c.number}, {"poi_id", c.poi_id}, {"kind", poi::to_string(c.kind)}, {"bearing", c.bearing}});

  ordered_json doc;
  doc["images"] = images;
  doc["instruction"] = prompt.instruction;
  doc["marker_map"] = marker_map;
  doc["n_choices"] = prompt.n_choices;
  doc["candidates"] = candidates;
  return doc.dump(2) + "\n";
}

void write_prompt_archive(const DecisionPrompt& prompt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < prompt.pairs.size(); ++i) {
    write_png(prompt.pairs[i].view.image, dir / ("view_" + std::to_string(i + 1) + ".png"));
    if (prompt.pairs[i].context)
      write_png(prompt.pairs[i].context->image, dir / ("context_" + std::to_string(i + 1) + ".png"));
  }
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  if (!f) throw Error("cannot write prompt manifest in " + dir.string());
  f << prompt_manifest(prompt);
}

}  // namespace pigeon::prompting
