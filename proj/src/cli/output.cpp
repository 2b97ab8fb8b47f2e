#include "pesin/cli/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace pesin::cli {

namespace {

// Creates missing parent directories.
std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Config, "cannot write " + path.string());
  return f;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::add(double v) {
  current_.push_back(format_double(v));
  return *this;
}

CsvTable& CsvTable::add(const Vec& v) {
  for (Index i = 0; i < v.size(); ++i) add(v(i));
  return *this;
}

CsvTable& CsvTable::add(long long v) {
  current_.push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::add(bool v) {
  current_.push_back(v ? "1" : "0");
  return *this;
}

CsvTable& CsvTable::add(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) {
    current_.push_back(v);
    return *this;
  }
  std::string q = "\"";
  for (char c : v) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  current_.push_back(q + "\"");
  return *this;
}

void CsvTable::end_row() {
  if (current_.size() != header_.size()) {
    fail(ErrorKind::Domain, "csv row has " + std::to_string(current_.size()) + " cells, header has " +
                                std::to_string(header_.size()));
  }
  std::string line;
  for (std::size_t i = 0; i < current_.size(); ++i) line += (i ? "," : "") + current_[i];
  rows_.push_back(std::move(line));
  current_.clear();
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += "\n";
  for (const auto& r : rows_) out += r + "\n";
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream f = open_output(path);
  f << str();
}

namespace {

Json sanitize(const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    return std::isfinite(v) ? j : Json(nullptr);
  }
  if (j.is_array() || j.is_object()) {
    Json out = j.is_array() ? Json::array() : Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (j.is_array()) {
        out.push_back(sanitize(*it));
      } else {
        out[it.key()] = sanitize(it.value());
      }
    }
    return out;
  }
  return j;
}

}  // namespace

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream f = open_output(path);
  f << sanitize(j).dump(2) << "\n";
}

Json json_vec(const Vec& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

void SvgPlot::hline(double y, const std::string& color, const std::string& label) {
  hlines_.push_back({y, {color, label}});
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string SvgPlot::str() const {
  const double W = 720, H = 480, left = 80, right = 180, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto ty = [&](double y) { return log_y_ ? std::log10(std::max(y, 1e-300)) : y; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series_) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  for (const auto& h : hlines_) {
    if (!std::isfinite(h.first) || (log_y_ && h.first <= 0)) continue;
    y0 = std::min(y0, ty(h.first));
    y1 = std::max(y1, ty(h.first));
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12 * std::max(1.0, std::abs(y1))) {
    const double pad = std::max(1e-12, 1e-3 * std::abs(y1));
    y0 -= pad, y1 += pad;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad, y1 += pad;
  }
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1 - (ty(y) - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title_)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4;
    const double yv = y0 + (y1 - y0) * i / 4;
    const double gx = left + pw * i / 4, gy = top + ph * (1 - i / 4.0);
    os << "<line x1=\"" << fmt(gx) << "\" y1=\"" << top + ph << "\" x2=\"" << fmt(gx) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(gx) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << fmt(xv, "%.3g") << "</text>\n";
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt(gy) << "\" x2=\"" << left << "\" y2=\"" << fmt(gy)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << fmt(gy + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
       << (log_y_ ? "1e" + fmt(yv, "%.3g") : fmt(yv, "%.4g")) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << escape(xlabel_) << "</text>\n";
  os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << top + ph / 2 << ")\">" << escape(ylabel_) << "</text>\n";

  int legend = 0;
  auto legend_entry = [&](const std::string& label, const std::string& color, bool dashed) {
    const double ly = top + 10 + 18 * legend++;
    os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 34 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    os << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << escape(label)
       << "</text>\n";
  };
  for (const auto& h : hlines_) {
    if (!std::isfinite(h.first) || (log_y_ && h.first <= 0)) continue;
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(py(h.first)) << "\" x2=\"" << left + pw << "\" y2=\""
       << fmt(py(h.first)) << "\" stroke=\"" << h.second.first << "\" stroke-dasharray=\"2,2\"/>\n";
    if (!h.second.second.empty()) legend_entry(h.second.second, h.second.first, true);
  }
  for (const auto& s : series_) {
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0)) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : " M") + fmt(px(s.x[i])) + " " + fmt(py(s.y[i]));
      pen = true;
      if (s.markers) {
        os << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << s.color
           << "\"/>\n";
      }
    }
    if (!d.empty()) {
      os << "<path d=\"" << d.substr(1) << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
         << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
    if (!s.label.empty()) legend_entry(s.label, s.color, s.dashed);
  }
  os << "</svg>\n";
  return os.str();
}

void SvgPlot::write(const std::filesystem::path& path) const {
  std::ofstream f = open_output(path);
  f << str();
}

}  // namespace pesin::cli
