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

#include <string>

#include "pigeon/geometry.hpp"

namespace pigeon {

/// Detector output for one object in the current view. `bearing` is the
/// world-frame direction from the observer to the object centroid.
struct Detection {
  int object_id = -1;
  std::string label;
  double confidence = 0.0;
  double bearing = 0.0;
  double range = 0.0;

  /// Object centroid implied by the detection, seen from `observer`.
  Point2 centroid_from(Point2 observer) const {
    return {observer.x + range * std::cos(bearing), observer.y + range * std::sin(bearing)};
  }
};

}  // namespace pigeon
