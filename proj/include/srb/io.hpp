#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

namespace srb {

/// Nine significant digits; "nan" / "inf" for non-finite values.
std::string format_number(double v);

/// JSON value rounded to nine significant digits; null when not finite.
nlohmann::ordered_json json_number(double v);

/// Comma-separated writer with a fixed header. Rows are flushed as written so
/// partial results survive a later failure.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  /// Leading text cells followed by numbers.
  void row(const std::vector<std::string>& text, const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& doc);
void write_text(const std::filesystem::path& file, const std::string& text);

/// Numeric columns of a CSV file with a header row. Missing columns throw
/// ConfigError.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& file);

/// Creates `dir`. An existing non-empty directory is an error unless
/// `overwrite` is set.
void prepare_output_dir(const std::filesystem::path& dir, bool overwrite);

}  // namespace srb
