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

#include "pigeon/camera.hpp"

#include <algorithm>
#include <cmath>

#include "pigeon/errors.hpp"

namespace pigeon {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw InvalidInputError("focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw InvalidInputError("principal point must lie inside the image");
}

CameraExtrinsics CameraExtrinsics::identity() {
  CameraExtrinsics e;
  e.rotation = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  e.translation = {0.0, 0.0, 0.0};
  return e;
}

CameraExtrinsics CameraExtrinsics::from_pose(const Pose& pose, double height) {
  const double ch = std::cos(pose.heading);
  const double sh = std::sin(pose.heading);
  const double cp = std::cos(pose.pitch);
  const double sp = std::sin(pose.pitch);
  const std::array<double, 3> forward{ch * cp, sh * cp, sp};
  const std::array<double, 3> right{sh, -ch, 0.0};
  // down = forward x right
  const std::array<double, 3> down{forward[1] * right[2] - forward[2] * right[1],
                                   forward[2] * right[0] - forward[0] * right[2],
                                   forward[0] * right[1] - forward[1] * right[0]};
  CameraExtrinsics e;
  e.rotation = {right, down, forward};
  const std::array<double, 3> c{pose.x, pose.y, height};
  for (int i = 0; i < 3; ++i)
    e.translation[i] = -(e.rotation[i][0] * c[0] + e.rotation[i][1] * c[1] + e.rotation[i][2] * c[2]);
  return e;
}

Point3 CameraExtrinsics::apply(Point3 p) const {
  const auto row = [&](int i) {
    return rotation[i][0] * p.x + rotation[i][1] * p.y + rotation[i][2] * p.z + translation[i];
  };
  return {row(0), row(1), row(2)};
}

std::optional<PixelProjection> project(const CameraIntrinsics& k, const CameraExtrinsics& e, Point3 p) {
  const Point3 c = e.apply(p);
  if (!(c.z > 0.0)) return std::nullopt;
  return PixelProjection{k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy, c.z};
}

std::pair<int, int> clamp_to_image(const CameraIntrinsics& k, double u, double v) {
  const auto clampi = [](double x, int hi) {
    if (!std::isfinite(x)) return x > 0 ? hi : 0;
    return static_cast<int>(std::clamp(std::lround(x), 0L, static_cast<long>(hi)));
  };
  return {clampi(u, k.width - 1), clampi(v, k.height - 1)};
}

}  // namespace pigeon
