#pragma once

// Batch commands behind the `arl` executable. Each returns the process exit
// status: 0 success, 1 usage, 2 data error, 3 engine error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "arl/model.hpp"

namespace arl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitEngine = 3;

/// Exit status for an error code.
int exit_status_for(std::string_view code);

struct MineOptions {
  std::filesystem::path data;
  double min_support = 0.0;
  double min_confidence = 0.0;
  RuleSource algorithm = RuleSource::apriori;
  bool stats = false;
};

/// Data file: a header line {"schema":{"inputs":[..],"outputs":[..]}}
/// followed by one row object per line.
Dataset read_data_file(const std::filesystem::path& path);

int cmd_mine(const MineOptions& options, std::ostream& out, std::ostream& err);

struct ReplayOptions {
  std::filesystem::path trace;
  std::filesystem::path bins;
  double min_support = 0.0;
  double min_confidence = 0.0;
  RuleSource algorithm = RuleSource::apriori;
  std::size_t regenerate_every = 1;
  bool feedback = false;
};

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err);

struct GenTraceOptions {
  std::filesystem::path spec;
  std::uint64_t seed = 0;
  std::size_t length = 0;
  std::filesystem::path out;
  /// Defaults to `<out>.sidecar.json`.
  std::filesystem::path sidecar;
};

int cmd_gen_trace(const GenTraceOptions& options, std::ostream& out, std::ostream& err);

struct InspectOptions {
  std::filesystem::path store;
  std::string app;
};

int cmd_inspect(const InspectOptions& options, std::ostream& out, std::ostream& err);

}  // namespace arl
