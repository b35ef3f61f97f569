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

#include "pigeon/render.hpp"

#include <cstdio>
#include <sstream>

#include "pigeon/errors.hpp"

namespace pigeon::render {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string trace_svg(const sim::Scene& scene, const mapping::GridMap& belief, const runner::EpisodeTrace& trace,
                      int ppc) {
  if (ppc < 1) throw InvalidInputError("pixels per cell must be positive");
  const auto& g = scene.truth.geometry();
  if (!(belief.geometry() == g)) throw InvalidInputError("belief map does not match the scene grid");
  const double s = ppc / g.resolution;
  const auto px = [&](double x) { return num((x - g.origin.x) * s); };
  const auto py = [&](double y) { return num((y - g.origin.y) * s); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g.width * ppc << "\" height=\"" << g.height * ppc
    << "\" viewBox=\"0 0 " << g.width * ppc << ' ' << g.height * ppc << "\">\n";
  o << "<title>" << escape(trace.scene) << " seed " << trace.seed << " (" << escape(trace.policy) << ")</title>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"#7f7f7f\"/>\n";

  o << "<g id=\"explored\" fill=\"#ffffff\">\n";
  for (int r = 0; r < g.height; ++r) {
    // Run-length rows keep the file small.
    for (int c = 0; c < g.width;) {
      if (belief.at(Cell{c, r}) != mapping::CellState::Free) {
        ++c;
        continue;
      }
      int e = c;
      while (e < g.width && belief.at(Cell{e, r}) == mapping::CellState::Free) ++e;
      o << "<rect x=\"" << c * ppc << "\" y=\"" << r * ppc << "\" width=\"" << (e - c) * ppc << "\" height=\"" << ppc
        << "\"/>\n";
      c = e;
    }
  }
  o << "</g>\n";

  o << "<g id=\"walls\" fill=\"#000000\">\n";
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width;) {
      if (scene.truth.at(Cell{c, r}) != mapping::CellState::Occupied) {
        ++c;
        continue;
      }
      int e = c;
      while (e < g.width && scene.truth.at(Cell{e, r}) == mapping::CellState::Occupied) ++e;
      o << "<rect x=\"" << c * ppc << "\" y=\"" << r * ppc << "\" width=\"" << (e - c) * ppc << "\" height=\"" << ppc
        << "\"/>\n";
      c = e;
    }
  }
  o << "</g>\n";

  o << "<g id=\"objects\">\n";
  for (const auto& obj : scene.objects) {
    const bool goal = scene.is_goal(obj);
    o << "<rect data-object=\"" << obj.id << "\" x=\"" << px(obj.centroid.x - obj.size.x / 2) << "\" y=\""
      << py(obj.centroid.y - obj.size.y / 2) << "\" width=\"" << num(obj.size.x * s) << "\" height=\""
      << num(obj.size.y * s) << "\" fill=\"" << (goal ? "#2ca02c" : "#d62728") << "\"/>\n";
    o << "<text x=\"" << px(obj.centroid.x) << "\" y=\"" << py(obj.centroid.y - obj.size.y / 2 - 0.1)
      << "\" font-size=\"10\" text-anchor=\"middle\">" << escape(obj.category) << "</text>\n";
  }
  o << "</g>\n";

  o << "<g id=\"trajectory\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\">\n<polyline points=\"";
  o << px(scene.start.x) << ',' << py(scene.start.y);
  for (const auto& st : trace.steps) o << ' ' << px(st.pose.x) << ',' << py(st.pose.y);
  o << "\"/>\n";
  o << "<circle cx=\"" << px(trace.final_pose.x) << "\" cy=\"" << py(trace.final_pose.y)
    << "\" r=\"4\" fill=\"#1f77b4\"/>\n</g>\n";

  o << "<g id=\"pois\" font-size=\"9\">\n";
  for (const auto& p : trace.pois) {
    const bool object = p.kind == poi::PoiKind::Object;
    const bool archived = p.state == poi::PoiState::Archived;
    o << "<g data-poi=\"" << p.id << "\"><circle cx=\"" << px(p.pose.x) << "\" cy=\"" << py(p.pose.y)
      << "\" r=\"3\" fill=\"" << (object ? "#ff7f0e" : "#9467bd") << "\" fill-opacity=\"" << (archived ? "0.4" : "1")
      << "\"/><text x=\"" << px(p.pose.x + 0.08) << "\" y=\"" << py(p.pose.y - 0.08) << "\">" << p.id
      << "</text></g>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

nlohmann::ordered_json poi_dump(const runner::EpisodeTrace& trace) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& p : trace.pois) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["kind"] = poi::to_string(p.kind);
    j["x"] = p.pose.x;
    j["y"] = p.pose.y;
    j["heading"] = p.pose.heading;
    j["state"] = poi::to_string(p.state);
    j["created_step"] = p.created_step;
    out.push_back(j);
  }
  return out;
}

}  // namespace pigeon::render
