#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace varinfer {

struct TraceRecord {
  std::size_t iteration = 0;
  std::vector<std::pair<std::string, double>> metrics;

  std::optional<double> metric(const std::string& name) const;

  bool operator==(const TraceRecord&) const = default;
};

/// Per-iteration scalar metrics of one run plus what is needed to repeat it.
struct RunTrace {
  std::string run_id;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<TraceRecord> records;
  double wall_time_seconds = 0.0;

  /// Throws ArgumentError unless iteration exceeds the last recorded one.
  void append(std::size_t iteration, std::vector<std::pair<std::string, double>> metrics);

  /// Equality of everything except wall time, which is not reproducible.
  bool operator==(const RunTrace& other) const;
};

}  // namespace varinfer
