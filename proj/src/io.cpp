#include "srb/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "srb/common.hpp"

namespace srb {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

nlohmann::ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(format_number(v).c_str(), nullptr);
}

CsvWriter::CsvWriter(const fs::path& file, const std::vector<std::string>& header)
    : out_(file), columns_(header.size()) {
  if (!out_) throw ConfigError("cannot write " + file.string());
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
  out_.flush();
}

void CsvWriter::row(const std::vector<double>& values) { row({}, values); }

void CsvWriter::row(const std::vector<std::string>& text, const std::vector<double>& values) {
  if (text.size() + values.size() != columns_) throw std::logic_error("CsvWriter: column count mismatch");
  std::size_t i = 0;
  for (const auto& t : text) out_ << (i++ ? "," : "") << t;
  for (double v : values) out_ << (i++ ? "," : "") << format_number(v);
  out_ << '\n';
  out_.flush();
}

void write_json(const fs::path& file, const nlohmann::ordered_json& doc) { write_text(file, doc.dump(2) + "\n"); }

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw ConfigError("CSV column '" + name + "' missing");
}

CsvTable read_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(file.string() + ": empty CSV");
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  table.header = split(line);
  table.columns.resize(table.header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size())
      throw ConfigError(file.string() + ": row " + std::to_string(row) + " has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      if (cells[i].empty() || end != cells[i].c_str() + cells[i].size())
        throw ConfigError(file.string() + ": row " + std::to_string(row) + " is not numeric");
      table.columns[i].push_back(v);
    }
  }
  return table;
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
  if (dir.empty()) throw ConfigError("no output directory given (--out or output.dir)");
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !overwrite)
      throw ConfigError("output directory " + dir.string() + " is not empty (use --overwrite)");
  }
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace srb
