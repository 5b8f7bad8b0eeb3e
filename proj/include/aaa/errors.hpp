#pragma once

#include <stdexcept>
#include <string>

namespace aaa {

/// Malformed or unsupported file contents (PNG, AAH1, TSV, JSON).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two images, heatmaps or vectors disagree in shape.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value outside the documented domain (heatmap > 1, epsilon <= 0, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace aaa
