#pragma once

#include <stdexcept>
#include <string>

namespace latefuse {

// Config / input-file problems (bad schema, missing fields, unparseable data).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FrameMismatch : std::runtime_error {
  explicit FrameMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyDataset : std::runtime_error {
  explicit EmptyDataset(const std::string& msg) : std::runtime_error(msg) {}
};

// Calibration data with only one class; nothing to fit.
struct DegenerateDataset : std::runtime_error {
  explicit DegenerateDataset(const std::string& msg) : std::runtime_error(msg) {}
};

// Loss or gradient became non-finite during optimization.
struct NonFinite : std::runtime_error {
  explicit NonFinite(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingCalibrator : std::runtime_error {
  explicit MissingCalibrator(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnknownAgent : std::runtime_error {
  explicit UnknownAgent(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoGroundTruth : std::runtime_error {
  explicit NoGroundTruth(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace latefuse
