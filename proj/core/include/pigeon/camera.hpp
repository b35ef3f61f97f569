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

#include <array>
#include <optional>
#include <utility>

#include "pigeon/geometry.hpp"

namespace pigeon {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 160.0;
  double fy = 160.0;
  double cx = 160.0;
  double cy = 120.0;
  int width = 320;
  int height = 240;

  /// Throws InvalidInputError unless fx, fy > 0 and the principal point is
  /// inside the image.
  void validate() const;
};

/// World-to-camera rigid transform. Camera axes: X right, Y down, Z forward.
struct CameraExtrinsics {
  std::array<std::array<double, 3>, 3> rotation{};
  std::array<double, 3> translation{};

  static CameraExtrinsics identity();
  /// Camera mounted `height` meters above the floor at the pose, looking
  /// along the heading and tilted up by the pitch.
  static CameraExtrinsics from_pose(const Pose& pose, double height);

  Point3 apply(Point3 p) const;
};

inline constexpr double kCameraHeight = 0.88;

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// s·[u, v, 1]ᵀ = K·E·[p, 1]ᵀ. Returns nullopt when the point is not in
/// front of the camera (s ≤ 0).
std::optional<PixelProjection> project(const CameraIntrinsics& k, const CameraExtrinsics& e, Point3 p);

/// Nearest pixel to (u, v) inside the image.
std::pair<int, int> clamp_to_image(const CameraIntrinsics& k, double u, double v);

}  // namespace pigeon
