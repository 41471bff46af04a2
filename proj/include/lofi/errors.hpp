#pragma once
//
// Error taxonomy. Three categories so the CLI can map failures to distinct
// exit codes: configuration problems (bad flags / incompatible options),
// data problems (malformed input, schema mismatches), and compute problems
// (numerical failure while estimating).
//
#include <stdexcept>
#include <string>

namespace lofi {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ComputeError : std::runtime_error {
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require_config(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline void require_data(bool ok, const std::string& msg) {
  if (!ok) throw DataError(msg);
}

inline void require_compute(bool ok, const std::string& msg) {
  if (!ok) throw ComputeError(msg);
}

}  // namespace lofi
