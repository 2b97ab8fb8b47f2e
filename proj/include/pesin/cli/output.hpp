#pragma once

// CSV tables, JSON summaries and a small SVG line-plot writer.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pesin/common.hpp"

namespace pesin::cli {

using Json = nlohmann::ordered_json;

/// %.17g, with nan / inf spelled out.
std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add(double v);
  CsvTable& add(const Vec& v);
  CsvTable& add(long long v);
  CsvTable& add(std::size_t v) { return add(static_cast<long long>(v)); }
  CsvTable& add(int v) { return add(static_cast<long long>(v)); }
  CsvTable& add(bool v);
  CsvTable& add(const std::string& v);  // quoted when needed
  CsvTable& add(const char* v) { return add(std::string(v)); }
  /// Closes the current row; throws if its width differs from the header.
  void end_row();

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
  std::vector<std::string> current_;
};

/// Keys keep insertion order; NaN and inf become null.
void write_json(const std::filesystem::path& path, const Json& j);
Json json_vec(const Vec& v);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool markers = false;
};

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel);

  void add(SvgSeries series) { series_.push_back(std::move(series)); }
  void hline(double y, const std::string& color, const std::string& label);
  void set_log_y(bool on) { log_y_ = on; }

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string title_, xlabel_, ylabel_;
  std::vector<SvgSeries> series_;
  std::vector<std::pair<double, std::pair<std::string, std::string>>> hlines_;
  bool log_y_ = false;
};

}  // namespace pesin::cli
