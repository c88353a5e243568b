// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace reenc {

// Base for all library errors. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape, channel-count, frame-rate or sample-rate mismatches.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite or out-of-range values where finite/positive data is required.
class ValueError : public Error {
 public:
  using Error::Error;
};

// On-disk format violations: bad magic, truncation, unknown dtype.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Unknown config keys, malformed key=value lines, bad CLI arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint/spec mismatches: wrong task, wrong architecture hash.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

// Empty or unusable corpora and datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace reenc
