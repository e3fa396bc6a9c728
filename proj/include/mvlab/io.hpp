#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mvlab/calculus.hpp"
#include "mvlab/constants.hpp"
#include "mvlab/grid.hpp"
#include "mvlab/heinz.hpp"

namespace mvlab {

inline constexpr std::string_view kVersion = "0.1.0";

/// Parses a JSON configuration; syntax errors become ConfigError with line and column.
nlohmann::json parse_config(std::string_view text, const std::string& source);
nlohmann::json load_config(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Typed lookups that report the dotted key path on failure.
double config_number(const nlohmann::json& j, const std::string& path, std::optional<double> fallback = {});
int config_int(const nlohmann::json& j, const std::string& path, std::optional<int> fallback = {});
std::string config_string(const nlohmann::json& j, const std::string& path,
                          std::optional<std::string> fallback = {});
/// Sub-object at a dotted path, or nullptr when absent.
const nlohmann::json* config_find(const nlohmann::json& root, const std::string& path);

/// {"preset": "identity" | "constant_scale" | "conformal_linear" | "sine_entry", ...}
/// or {"polynomial": [{"row", "col", "coefficient", "powers"}], "declared_deviation"}.
MetricSpec metric_from_json(const nlohmann::json& j, const std::string& path);

struct DomainOverrides {
  std::optional<double> spacing;
  std::optional<int> dimension;
};

/// {"kind": "ball" | "half_ball", "center": [...], "radius", "spacing", "dimension", "metric"}.
std::shared_ptr<const Domain> domain_from_json(const nlohmann::json& j, const std::string& path,
                                               const DomainOverrides& overrides = {});

/// Missing constants default to 0.
BoundParams params_from_json(const nlohmann::json& j, const std::string& path, int n);

// Field files: a text header (dimension, spacing, domain, metric descriptor,
// bounding box, run-length encoded mask) followed by one value per in-mask node
// in lexicographic order, printed with 17 significant digits.
std::string field_to_text(const ScalarField& field);
ScalarField field_from_text(std::string_view text, const std::string& source);
void write_field(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_field(const std::filesystem::path& path);

std::string shell_profile_csv(const std::vector<ShellSample>& samples);
std::string heinz_csv(const HeinzReport& report);
std::string format_double(double x);

/// JSON Lines report: the first line is a header holding the only timestamp,
/// every following line is one record.
class ReportWriter {
 public:
  explicit ReportWriter(std::string tool);
  void add(nlohmann::json record);
  std::string text() const;
  void write(const std::filesystem::path& path) const;
  const std::vector<nlohmann::json>& records() const { return records_; }

 private:
  std::string tool_;
  std::vector<nlohmann::json> records_;
};

}  // namespace mvlab
