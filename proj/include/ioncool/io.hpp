#pragma once

// Text output helpers: locale-independent number formatting, CSV and JSON
// serialization of library results, and atomic file replacement.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ioncool/analysis.hpp"
#include "ioncool/detection.hpp"

namespace ioncool::io {

using Json = nlohmann::ordered_json;

// Shortest representation that parses back to the same double; "nan",
// "inf", "-inf" for non-finite values.
[[nodiscard]] std::string format_double(double v);
// Strict parse of a full token; throws PreconditionError on trailing junk.
[[nodiscard]] double parse_double(std::string_view text);
[[nodiscard]] long long parse_integer(std::string_view text);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view data);
[[nodiscard]] std::string hex64(std::uint64_t v);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

// Columns of equal length, one header name each.
[[nodiscard]] std::string csv_columns(const std::vector<std::string>& header,
                                      const std::vector<std::vector<double>>& columns);

[[nodiscard]] std::string scan_to_csv(const ScanData& scan, std::string_view x_name);
// Reads a three-column CSV (x, y, sigma_y) with a header row.
[[nodiscard]] ScanData scan_from_csv(std::string_view text);

[[nodiscard]] std::string histogram_to_csv(const Histogram& hist);
[[nodiscard]] Json histogram_to_json(const Histogram& hist);
[[nodiscard]] std::string references_to_csv(const ReferenceDistributions& refs);

[[nodiscard]] Json fit_report_to_json(const FitReport& report);
[[nodiscard]] Json thermometry_to_json(const SidebandThermometry& t);

// JSON text with two-space indentation and a trailing newline.
[[nodiscard]] std::string dump(const Json& j);

}  // namespace ioncool::io
