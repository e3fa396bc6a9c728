#include "mvlab/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const json* lookup(const json& root, const std::string& path) {
  const json* cur = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

Point point_at(const json& j, const std::string& path, int n) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  if (j.size() > static_cast<std::size_t>(n)) config_error(path, "more coordinates than the dimension");
  Point p{};
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_error(path + "[" + std::to_string(i) + "]", "expected a number");
    p[i] = j[i].get<double>();
  }
  return p;
}

}  // namespace

json parse_config(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                            ": invalid JSON");
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

json load_config(const std::filesystem::path& path) { return parse_config(read_text(path), path.string()); }

const json* config_find(const json& root, const std::string& path) { return lookup(root, path); }

double config_number(const json& j, const std::string& path, std::optional<double> fallback) {
  const json* v = lookup(j, path);
  if (!v) {
    if (fallback) return *fallback;
    config_error(path, "missing required number");
  }
  if (!v->is_number()) config_error(path, "expected a number");
  return v->get<double>();
}

int config_int(const json& j, const std::string& path, std::optional<int> fallback) {
  const json* v = lookup(j, path);
  if (!v) {
    if (fallback) return *fallback;
    config_error(path, "missing required integer");
  }
  if (!v->is_number_integer()) config_error(path, "expected an integer");
  return v->get<int>();
}

std::string config_string(const json& j, const std::string& path, std::optional<std::string> fallback) {
  const json* v = lookup(j, path);
  if (!v) {
    if (fallback) return *fallback;
    config_error(path, "missing required string");
  }
  if (!v->is_string()) config_error(path, "expected a string");
  return v->get<std::string>();
}

MetricSpec metric_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
  if (j.contains("polynomial")) {
    const json& table = j["polynomial"];
    if (!table.is_array()) config_error(path + ".polynomial", "expected an array");
    std::vector<MetricSpec::PolynomialTerm> terms;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const std::string tp = path + ".polynomial[" + std::to_string(i) + "]";
      MetricSpec::PolynomialTerm t;
      t.row = config_int(table[i], "row");
      t.col = config_int(table[i], "col");
      t.coefficient = config_number(table[i], "coefficient");
      if (const json* p = lookup(table[i], "powers")) {
        if (!p->is_array() || p->size() > static_cast<std::size_t>(kMaxDim))
          config_error(tp + ".powers", "expected at most 4 integers");
        for (std::size_t k = 0; k < p->size(); ++k) t.powers[k] = (*p)[k].get<int>();
      }
      terms.push_back(t);
    }
    return MetricSpec::polynomial(std::move(terms), config_number(j, "declared_deviation", 0.0));
  }
  const std::string preset = config_string(j, "preset", std::string("identity"));
  if (preset == "identity") return MetricSpec::identity();
  const double c = config_number(j, "coefficient", 0.0);
  if (preset == "constant_scale") return MetricSpec::constant_scale(c);
  if (preset == "conformal_linear") return MetricSpec::conformal_linear(c, config_int(j, "axis", 1));
  if (preset == "sine_entry")
    return MetricSpec::sine_entry(c, config_int(j, "entry", 0), config_int(j, "axis", 1));
  config_error(path + ".preset", "unknown metric preset '" + preset + "'");
}

std::shared_ptr<const Domain> domain_from_json(const json& j, const std::string& path,
                                               const DomainOverrides& overrides) {
  if (!j.is_object()) config_error(path, "expected an object");
  const std::string kind = config_string(j, "kind", std::string("ball"));
  const int n = overrides.dimension ? *overrides.dimension : config_int(j, "dimension", 2);
  const double r = config_number(j, "radius", 1.0);
  const double h = overrides.spacing ? *overrides.spacing : config_number(j, "spacing", 1.0 / 128.0);
  Point center{};
  if (const json* c = lookup(j, "center")) center = point_at(*c, path + ".center", std::max(n, 1));
  try {
    if (kind == "ball") {
      MetricSpec metric;
      if (const json* m = lookup(j, "metric")) metric = metric_from_json(*m, path + ".metric");
      return make_ball_domain(center, r, h, n, std::move(metric));
    }
    if (kind == "half_ball") {
      if (const json* m = lookup(j, "metric")) {
        if (!metric_from_json(*m, path + ".metric").is_identity())
          config_error(path + ".metric", "half balls carry the Euclidean metric only");
      }
      return make_half_ball_domain(center, r, h, n);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
  config_error(path + ".kind", "expected 'ball' or 'half_ball'");
}

BoundParams params_from_json(const json& j, const std::string& path, int n) {
  if (!j.is_object()) config_error(path, "expected an object");
  BoundParams p;
  p.n = n;
  p.A0 = config_number(j, "A0", 0.0);
  p.A1 = config_number(j, "A1", 0.0);
  p.a = config_number(j, "a", 0.0);
  p.B0 = config_number(j, "B0", 0.0);
  p.B1 = config_number(j, "B1", 0.0);
  p.b = config_number(j, "b", 0.0);
  try {
    p.validate();
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return p;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string field_to_text(const ScalarField& field) {
  const Domain& d = field.domain();
  const int n = d.dimension();
  std::string s = "mvlab-field 1\n";
  s += "dimension " + std::to_string(n) + "\n";
  s += "spacing " + format_double(d.spacing()) + "\n";
  s += std::string("kind ") + (d.kind() == DomainKind::Ball ? "ball" : "half_ball") + "\n";
  s += "center";
  for (int k = 0; k < n; ++k) s += " " + format_double(d.center()[k]);
  s += "\nradius " + format_double(d.radius()) + "\n";
  s += "metric " + d.metric().descriptor() + "\n";
  s += "density " + std::string(field.density() ? "1" : "0") + "\n";
  s += "box_lo";
  for (int k = 0; k < n; ++k) s += " " + std::to_string(d.box_lo()[k]);
  s += "\nbox_extent";
  for (int k = 0; k < n; ++k) s += " " + std::to_string(d.box_extent()[k]);
  s += "\nmask";
  bool state = false;
  std::size_t run = 0;
  for (std::size_t f = 0; f < d.box_size(); ++f) {
    if (d.in_mask(f) != state) {
      s += " " + std::to_string(run);
      state = !state;
      run = 0;
    }
    ++run;
  }
  s += " " + std::to_string(run) + "\nvalues " + std::to_string(d.mask_nodes().size()) + "\n";
  for (std::size_t f : d.mask_nodes()) s += format_double(field[f]) + "\n";
  return s;
}

ScalarField field_from_text(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorCode::IoError, source + ": " + what);
  };
  std::string line, key;
  auto next = [&](const char* expected) -> std::istringstream {
    if (!std::getline(in, line)) fail(std::string("missing '") + expected + "' line");
    std::istringstream ls(line);
    ls >> key;
    if (key != expected) fail(std::string("expected '") + expected + "', found '" + key + "'");
    return ls;
  };
  {
    auto ls = next("mvlab-field");
    int version = 0;
    ls >> version;
    if (version != 1) fail("unsupported field version");
  }
  int n = 0;
  next("dimension") >> n;
  double h = 0.0;
  next("spacing") >> h;
  std::string kind;
  next("kind") >> kind;
  Point center{};
  {
    auto ls = next("center");
    for (int k = 0; k < n && k < kMaxDim; ++k) ls >> center[k];
  }
  double r = 0.0;
  next("radius") >> r;
  std::string metric_text;
  {
    auto ls = next("metric");
    std::getline(ls >> std::ws, metric_text);
  }
  int density = 1;
  next("density") >> density;

  std::shared_ptr<const Domain> domain;
  try {
    if (kind == "ball") {
      domain = make_ball_domain(center, r, h, n, metric_from_json(parse_config(metric_text, source), "metric"));
    } else if (kind == "half_ball") {
      domain = make_half_ball_domain(center, r, h, n);
    } else {
      fail("unknown domain kind '" + kind + "'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw Error(ErrorCode::IoError, source + ": " + e.what());
  }
  {
    auto ls = next("box_lo");
    for (int k = 0; k < n; ++k) {
      int v = 0;
      ls >> v;
      if (v != domain->box_lo()[k]) fail("bounding box does not match the domain");
    }
  }
  {
    auto ls = next("box_extent");
    for (int k = 0; k < n; ++k) {
      int v = 0;
      ls >> v;
      if (v != domain->box_extent()[k]) fail("bounding box does not match the domain");
    }
  }
  {
    auto ls = next("mask");
    bool state = false;
    std::size_t f = 0, run = 0;
    while (ls >> run) {
      for (std::size_t i = 0; i < run; ++i, ++f) {
        if (f >= domain->box_size() || domain->in_mask(f) != state) fail("mask does not match the domain");
      }
      state = !state;
    }
    if (f != domain->box_size()) fail("mask length does not match the bounding box");
  }
  std::size_t count = 0;
  next("values") >> count;
  if (count != domain->mask_nodes().size()) fail("value count does not match the mask");
  std::vector<double> values(domain->box_size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f : domain->mask_nodes()) {
    if (!std::getline(in, line)) fail("truncated values");
    char* end = nullptr;
    values[f] = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) fail("malformed value '" + line + "'");
  }
  try {
    return ScalarField(std::move(domain), std::move(values), density != 0);
  } catch (const Error& e) {
    throw Error(ErrorCode::IoError, source + ": " + e.what());
  }
}

void write_field(const ScalarField& field, const std::filesystem::path& path) {
  write_text(path, field_to_text(field));
}

ScalarField read_field(const std::filesystem::path& path) {
  return field_from_text(read_text(path), path.string());
}

std::string shell_profile_csv(const std::vector<ShellSample>& samples) {
  std::string s = "r,M_r,quadrature_node_count,clipped_flag\n";
  for (const ShellSample& x : samples) {
    s += format_double(x.radius) + "," + format_double(x.mean) + "," + std::to_string(x.node_count) + "," +
         (x.clipped ? "1" : "0") + "\n";
  }
  return s;
}

std::string heinz_csv(const HeinzReport& report) {
  std::string s = "rho,f\n";
  for (std::size_t k = 0; k < report.rho_grid.size(); ++k)
    s += format_double(report.rho_grid[k]) + "," + format_double(report.f_values[k]) + "\n";
  return s;
}

ReportWriter::ReportWriter(std::string tool) : tool_(std::move(tool)) {}

void ReportWriter::add(json record) { records_.push_back(std::move(record)); }

std::string ReportWriter::text() const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  json header{{"header", {{"tool", "mvlab"}, {"command", tool_}, {"version", std::string(kVersion)},
                          {"timestamp", stamp}}}};
  std::string s = header.dump() + "\n";
  for (const json& r : records_) s += r.dump() + "\n";
  return s;
}

void ReportWriter::write(const std::filesystem::path& path) const { write_text(path, text()); }

}  // namespace mvlab
