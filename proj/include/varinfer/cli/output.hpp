#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "varinfer/matrix.hpp"
#include "varinfer/trace.hpp"

namespace varinfer::cli {

/// Builds CSV text: a header row, then rows of %.17g values.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);

  void row(std::span<const double> values);
  /// Leading integer column (an index or label) followed by values.
  void row(long long label, std::span<const double> values);

  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

/// "prefix0,prefix1,...".
std::vector<std::string> numbered_columns(const std::string& prefix, std::size_t count);

/// One row per trace record: the iteration column, then `metrics` in order.
/// The header is written even for an empty trace.
std::string trace_csv(const RunTrace& trace, const std::string& index_name, const std::vector<std::string>& metrics);

/// Rows of `m` under columns prefix0..prefixN, optionally preceded by a row label.
std::string matrix_csv(const Matrix& m, const std::string& prefix, const std::string& label_name = "");

/// Output directory; created on construction. Every failure is an IoError.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  void write(const std::string& name, const std::string& content) const;
  void write_json(const std::string& name, const nlohmann::ordered_json& value) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace varinfer::cli
