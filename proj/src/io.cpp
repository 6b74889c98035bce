#include "ioncool/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "ioncool/error.hpp"

namespace ioncool::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw PreconditionError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

long long parse_integer(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw PreconditionError("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_columns(const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size() || columns.empty()) {
    throw PreconditionError("csv_columns: header and column counts differ");
  }
  const std::size_t rows = columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw PreconditionError("csv_columns: ragged columns");
  }
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out += ',';
      out += format_double(columns[j][i]);
    }
    out += '\n';
  }
  return out;
}

std::string scan_to_csv(const ScanData& scan, std::string_view x_name) {
  return csv_columns({std::string(x_name), "y", "sigma_y"}, {scan.x, scan.y, scan.sigma_y});
}

ScanData scan_from_csv(std::string_view text) {
  ScanData scan;
  bool header = true;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 3) {
      throw PreconditionError("scan CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    scan.x.push_back(parse_double(cells[0]));
    scan.y.push_back(parse_double(cells[1]));
    scan.sigma_y.push_back(parse_double(cells[2]));
  }
  scan.validate();
  return scan;
}

std::string histogram_to_csv(const Histogram& hist) {
  std::string out = "k,count\n";
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    out += std::to_string(k) + ',' + std::to_string(hist.counts[k]) + '\n';
  }
  return out;
}

Json histogram_to_json(const Histogram& hist) {
  Json j;
  j["shots"] = hist.shots;
  j["counts"] = hist.counts;
  j["mean"] = hist.mean();
  return j;
}

std::string references_to_csv(const ReferenceDistributions& refs) {
  std::vector<double> k(refs.psi_down.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<double>(i);
  return csv_columns({"k", "psi_down", "psi_up"}, {k, refs.psi_down, refs.psi_up});
}

Json fit_report_to_json(const FitReport& report) {
  Json j;
  Json params = Json::object();
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    params[report.names[i]] = Json{{"value", report.values[i]}, {"sigma", report.sigmas[i]}};
  }
  j["parameters"] = params;
  j["covariance"] = report.covariance;
  j["chi2"] = report.chi2;
  j["dof"] = report.dof;
  j["residual_norm"] = report.residual_norm;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["low_confidence"] = report.low_confidence;
  j["message"] = report.message;
  return j;
}

Json thermometry_to_json(const SidebandThermometry& t) {
  return Json{{"q", t.q},       {"sigma_q", t.sigma_q}, {"nbar", t.nbar},
              {"sigma_nbar", t.sigma_nbar}, {"p0", t.p0}, {"sigma_p0", t.sigma_p0}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace ioncool::io
