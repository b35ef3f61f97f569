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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pigeon/camera.hpp"
#include "pigeon/image.hpp"
#include "pigeon/poi.hpp"

namespace pigeon::prompting {

inline constexpr int kMarkerRadius = 10;
inline constexpr int kMarkerDiameter = 2 * kMarkerRadius;

struct Marker {
  int number = 0;
  int x = 0;
  int y = 0;

  friend bool operator==(const Marker&, const Marker&) = default;
};

struct AnnotatedSnapshot {
  SnapshotRef base;
  Image image;
  /// Final (post-collision) marker centres.
  std::vector<Marker> markers;
};

/// Overlays numbered circular markers. Marker centres are clamped into the
/// image; a marker overlapping an earlier one is shifted vertically by whole
/// diameters (down first, then up) until it is clear.
AnnotatedSnapshot annotate(const SnapshotRef& snapshot, const std::vector<Marker>& markers);

/// Pixel for a PoI in the image it was captured with, clamped to the image.
/// Points behind the camera are pinned to the bottom corner on their side.
Marker marker_for(const CameraIntrinsics& k, const poi::PoI& poi, int number);

struct PromptTemplate {
  std::string decision;
  std::string confirmation;

  static PromptTemplate defaults();
  /// Reads decision.txt and confirmation.txt from a directory; missing
  /// files fall back to the defaults.
  static PromptTemplate load(const std::filesystem::path& dir);
};

/// Replaces every {goal} and {n} placeholder.
std::string fill_template(const std::string& text, const std::string& goal, int n);

struct ImagePair {
  AnnotatedSnapshot view;
  /// Older observation of the same area, if one was available.
  SnapshotRef context;
};

struct CandidateInfo {
  int number = 0;
  int poi_id = 0;
  poi::PoiKind kind = poi::PoiKind::Frontier;
  /// Direction to the candidate relative to the agent heading, radians.
  double bearing = 0.0;
};

struct DecisionPrompt {
  std::vector<ImagePair> pairs;
  std::string instruction;
  int n_choices = 0;
  /// marker_map[k - 1] is the PoI id behind display number k.
  std::vector<int> marker_map;
  std::vector<CandidateInfo> candidates;

  /// PoI id for a display number, or nullopt when out of range.
  std::optional<int> poi_for(int number) const;
};

/// One annotated view per source snapshot, markers numbered 1..n in
/// candidate order, each view paired with its context image. Throws
/// InvalidInputError on an empty candidate set.
DecisionPrompt assemble_decision_prompt(const poi::CandidateSet& cands, const std::string& goal,
                                        const PromptTemplate& tmpl, const CameraIntrinsics& k, const Pose& agent);

struct ConfirmationPrompt {
  std::vector<SnapshotRef> images;
  std::string instruction;
};

/// Images in capture order. Throws InvalidInputError when empty.
ConfirmationPrompt assemble_confirmation_prompt(std::vector<SnapshotRef> images, const std::string& goal,
                                                const PromptTemplate& tmpl);

/// Writes view_<k>.png / context_<k>.png and manifest.json into `dir`.
void write_prompt_archive(const DecisionPrompt& prompt, const std::filesystem::path& dir);

/// Manifest document for a prompt (file names as written by the archive).
std::string prompt_manifest(const DecisionPrompt& prompt);

}  // namespace pigeon::prompting
