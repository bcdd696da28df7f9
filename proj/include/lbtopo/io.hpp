#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbtopo/domain.hpp"

namespace lbtopo {

/// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// 17 significant digits, so the text round-trips to the same double.
std::string format_double(double v);

struct VtkField {
  std::string name;
  /// Per-node scalars (N) or vectors (3 × N).
  std::variant<Eigen::VectorXd, Eigen::Matrix3Xd> data;
};

/// Legacy ASCII VTK, STRUCTURED_POINTS with unit spacing, POINT_DATA fields.
std::string vtk_structured_points(const GridGeometry& g, const std::vector<VtkField>& fields,
                                  std::string_view title = "lbtopo");

/// Comma-separated table with a header row; cells are preformatted.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  using Cell = std::variant<double, long, std::string>;
  void add(std::vector<Cell> row);
  [[nodiscard]] std::string str() const;
  [[nodiscard]] std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses a flat config table; `source` names the origin in diagnostics.
/// format is "json" or "toml". A run manifest is accepted too: its "config"
/// member is read and the rest ignored.
CaseConfig parse_config(std::string_view text, std::string_view format, std::string_view source = "config");

/// Picks the format from the extension (.toml, anything else JSON).
CaseConfig load_config(const std::filesystem::path& path);

/// Every CaseConfig field, unset optionals as null.
nlohmann::json config_to_json(const CaseConfig& config);

/// Names of all accepted config keys, in declaration order.
const std::vector<std::string>& config_keys();

/// Common manifest skeleton: tool version, command, config echo, the stencil
/// direction tables. Callers add statuses, timings and outputs.
nlohmann::json make_manifest(std::string_view command, const CaseConfig& config);

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace lbtopo
