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

#include <stdexcept>
#include <string>

namespace pigeon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class MapBoundsError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in a state its contract forbids (e.g. acting
/// after Stop).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Planning was requested from a cell that cannot be occupied.
class StartBlockedError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Scene loading failures each get their own type so the CLI can map them
// to distinct exit codes.
class SceneParseError : public Error {
 public:
  using Error::Error;
};

class SceneSchemaError : public Error {
 public:
  using Error::Error;
};

class SceneStartBlockedError : public Error {
 public:
  using Error::Error;
};

class UnreachableGoalError : public Error {
 public:
  using Error::Error;
};

/// Remote policy rejected the request for a reason retrying cannot fix
/// (authentication, malformed request).
class VlmConfigError : public Error {
 public:
  using Error::Error;
};

/// Network use was requested while running offline.
class OfflineViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace pigeon
