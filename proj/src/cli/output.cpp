#include "varinfer/cli/output.hpp"

#include <fstream>

#include "varinfer/checkpoint.hpp"
#include "varinfer/errors.hpp"

namespace varinfer::cli {

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_) throw ArgumentError("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += format_double(values[i]);
  }
  text_ += '\n';
}

void CsvWriter::row(long long label, std::span<const double> values) {
  if (values.size() + 1 != columns_) throw ArgumentError("CsvWriter: row width does not match header");
  text_ += std::to_string(label);
  for (double v : values) {
    text_ += ',';
    text_ += format_double(v);
  }
  text_ += '\n';
}

std::vector<std::string> numbered_columns(const std::string& prefix, std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::string trace_csv(const RunTrace& trace, const std::string& index_name, const std::vector<std::string>& metrics) {
  std::vector<std::string> header{index_name};
  header.insert(header.end(), metrics.begin(), metrics.end());
  CsvWriter csv(header);
  std::vector<double> values;
  for (const auto& rec : trace.records) {
    values.clear();
    for (const auto& name : metrics) {
      const auto v = rec.metric(name);
      if (!v) throw ArgumentError("trace_csv: record lacks metric '" + name + "'");
      values.push_back(*v);
    }
    csv.row(static_cast<long long>(rec.iteration), values);
  }
  return csv.str();
}

std::string matrix_csv(const Matrix& m, const std::string& prefix, const std::string& label_name) {
  std::vector<std::string> header;
  if (!label_name.empty()) header.push_back(label_name);
  for (auto& name : numbered_columns(prefix, m.cols())) header.push_back(std::move(name));
  CsvWriter csv(header);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (label_name.empty()) {
      csv.row(m.row(r));
    } else {
      csv.row(static_cast<long long>(r), m.row(r));
    }
  }
  return csv.str();
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec || !std::filesystem::is_directory(root_)) {
    throw IoError("cannot create output directory " + root_.string() + (ec ? ": " + ec.message() : ""));
  }
}

void OutputDir::write(const std::string& name, const std::string& content) const {
  const auto path = root_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void OutputDir::write_json(const std::string& name, const nlohmann::ordered_json& value) const {
  write(name, value.dump(2) + "\n");
}

}  // namespace varinfer::cli
