#pragma once

#include <stdexcept>
#include <string>

namespace docdial {

// Malformed input file (bad JSON line, bad header, ...). Message carries the
// source location (path:line) when known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid input that violates a corpus/model invariant.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, truncated or corrupted checkpoint file.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace docdial
