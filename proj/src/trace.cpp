#include "varinfer/trace.hpp"

#include "varinfer/errors.hpp"

namespace varinfer {

std::optional<double> TraceRecord::metric(const std::string& name) const {
  for (const auto& [key, value] : metrics) {
    if (key == name) return value;
  }
  return std::nullopt;
}

void RunTrace::append(std::size_t iteration, std::vector<std::pair<std::string, double>> metrics) {
  if (!records.empty() && iteration <= records.back().iteration) {
    throw ArgumentError("RunTrace: iteration indices must be strictly increasing");
  }
  records.push_back({iteration, std::move(metrics)});
}

bool RunTrace::operator==(const RunTrace& other) const {
  return run_id == other.run_id && seed == other.seed && config == other.config && records == other.records;
}

}  // namespace varinfer
