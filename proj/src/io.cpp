#include "lbtopo/io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <system_error>

#include <unistd.h>

#define TOML_ENABLE_FORMATTERS 0
#include <toml.hpp>

namespace lbtopo {

namespace fs = std::filesystem;
using nlohmann::json;

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string vtk_structured_points(const GridGeometry& g, const std::vector<VtkField>& fields, std::string_view title) {
  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << g.nx() << ' ' << g.ny() << ' ' << g.nz() << "\nORIGIN 0 0 0\nSPACING 1 1 1\n";
  os << "POINT_DATA " << g.size() << '\n';
  // node index runs x fastest, matching the VTK point order
  for (const auto& f : fields) {
    if (const auto* s = std::get_if<Eigen::VectorXd>(&f.data)) {
      if (s->size() != g.size()) throw std::invalid_argument("vtk field size mismatch: " + f.name);
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (Index n = 0; n < s->size(); ++n) os << format_double((*s)[n]) << '\n';
    } else {
      const auto& v = std::get<Eigen::Matrix3Xd>(f.data);
      if (v.cols() != g.size()) throw std::invalid_argument("vtk field size mismatch: " + f.name);
      os << "VECTORS " << f.name << " double\n";
      for (Index n = 0; n < v.cols(); ++n)
        os << format_double(v(0, n)) << ' ' << format_double(v(1, n)) << ' ' << format_double(v(2, n)) << '\n';
    }
  }
  return os.str();
}

void CsvTable::add(std::vector<Cell> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("csv row width mismatch");
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (const auto& c : row) {
    if (const auto* d = std::get_if<double>(&c)) cells.push_back(format_double(*d));
    else if (const auto* l = std::get_if<long>(&c)) cells.push_back(std::to_string(*l));
    else cells.push_back(std::get<std::string>(c));
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

namespace {

struct Field {
  std::string name;
  std::function<json(const CaseConfig&)> get;
  // throws std::string with the expected type on mismatch
  std::function<void(CaseConfig&, const json&)> set;
};

template <class T>
Field make_field(std::string name, T CaseConfig::*m) {
  Field f;
  f.name = std::move(name);
  f.get = [m](const CaseConfig& c) -> json {
    if constexpr (std::is_same_v<T, std::optional<double>>) return (c.*m) ? json(*(c.*m)) : json(nullptr);
    else if constexpr (std::is_same_v<T, CaseKind>) return std::string(to_string(c.*m));
    else return c.*m;
  };
  f.set = [m](CaseConfig& c, const json& v) {
    if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (v.is_null()) c.*m = std::nullopt;
      else if (v.is_number()) c.*m = v.get<double>();
      else throw std::string("a number or null");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::string("a number");
      c.*m = v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::string("true or false");
      c.*m = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::string("an integer");
      c.*m = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::string("a string");
      c.*m = v.get<std::string>();
    } else {
      if (!v.is_string()) throw std::string("a string");
      c.*m = parse_case_kind(v.get<std::string>());
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      make_field("case_kind", &CaseConfig::case_kind),
      make_field("nx", &CaseConfig::nx),
      make_field("ny", &CaseConfig::ny),
      make_field("nz", &CaseConfig::nz),
      make_field("tau", &CaseConfig::tau),
      make_field("rho0", &CaseConfig::rho0),
      make_field("u_in", &CaseConfig::u_in),
      make_field("p1", &CaseConfig::p1),
      make_field("p0", &CaseConfig::p0),
      make_field("Re", &CaseConfig::Re),
      make_field("Vmax", &CaseConfig::Vmax),
      make_field("K", &CaseConfig::K),
      make_field("sigma", &CaseConfig::sigma),
      make_field("dxi", &CaseConfig::dxi),
      make_field("max_phi_change", &CaseConfig::max_phi_change),
      make_field("lambda_sharpness", &CaseConfig::lambda_sharpness),
      make_field("Pr", &CaseConfig::Pr),
      make_field("beta_max", &CaseConfig::beta_max),
      make_field("conductivity_ratio", &CaseConfig::conductivity_ratio),
      make_field("tau_g_fluid", &CaseConfig::tau_g_fluid),
      make_field("tau_g_solid", &CaseConfig::tau_g_solid),
      make_field("forward_tol", &CaseConfig::forward_tol),
      make_field("adjoint_tol", &CaseConfig::adjoint_tol),
      make_field("max_steps", &CaseConfig::max_steps),
      make_field("stability_iter_cap", &CaseConfig::stability_iter_cap),
      make_field("window", &CaseConfig::window),
      make_field("adjoint_divergence_limit", &CaseConfig::adjoint_divergence_limit),
      make_field("pair_average", &CaseConfig::pair_average),
      make_field("max_iterations", &CaseConfig::max_iterations),
      make_field("fdm_step", &CaseConfig::fdm_step),
      make_field("verify_tol", &CaseConfig::verify_tol),
      make_field("sensitivity_form", &CaseConfig::sensitivity_form),
      make_field("port_lo", &CaseConfig::port_lo),
      make_field("port_hi", &CaseConfig::port_hi),
      make_field("port_fraction", &CaseConfig::port_fraction),
      make_field("threads", &CaseConfig::threads),
  };
  return table;
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// First line holding `"key"` followed by a colon; 0 if not found.
int json_key_line(std::string_view text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  for (std::size_t pos = text.find(quoted); pos != std::string_view::npos; pos = text.find(quoted, pos + 1)) {
    std::size_t k = pos + quoted.size();
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && text[k] == ':') return line_of_offset(text, pos);
  }
  return 0;
}

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw ConfigError("unsupported TOML value type");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.name);
    return k;
  }();
  return keys;
}

CaseConfig parse_config(std::string_view text, std::string_view format, std::string_view source) {
  const std::string src(source);
  json doc;
  std::map<std::string, int> lines;
  if (format == "toml") {
    try {
      const toml::table t = toml::parse(text, src);
      doc = toml_to_json(t);
      for (const auto& [k, v] : t) lines[std::string(k.str())] = static_cast<int>(k.source().begin.line);
    } catch (const toml::parse_error& e) {
      throw ConfigError(src + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
    }
  } else if (format == "json") {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(src + ":" + std::to_string(line_of_offset(text, e.byte ? e.byte - 1 : 0)) + ": " +
                        "malformed JSON");
    }
  } else {
    throw ConfigError("unknown config format '" + std::string(format) + "'");
  }
  if (!doc.is_object()) throw ConfigError(src + ": config must be a table of key/value pairs");
  const bool manifest = doc.contains("manifest_version");
  if (manifest) {
    if (!doc.contains("config") || !doc["config"].is_object()) throw ConfigError(src + ": manifest has no config");
    doc = doc["config"];
  }
  auto where = [&](const std::string& key) {
    int line = 0;
    if (auto it = lines.find(key); it != lines.end()) line = it->second;
    else if (format == "json") line = json_key_line(text, key);
    return line > 0 ? src + ":" + std::to_string(line) : src;
  };

  CaseConfig cfg;
  // case_kind first: nz's default depends on it
  if (auto it = doc.find("case_kind"); it != doc.end()) {
    try {
      fields().front().set(cfg, *it);
    } catch (const std::string& want) {
      throw ConfigError(where("case_kind") + ": key 'case_kind' must be " + want);
    } catch (const ConfigError& e) {
      throw ConfigError(where("case_kind") + ": " + e.what());
    }
  }
  for (const auto& [key, value] : doc.items()) {
    auto f = std::find_if(fields().begin(), fields().end(), [&](const Field& x) { return x.name == key; });
    if (f == fields().end()) throw ConfigError(where(key) + ": unknown key '" + key + "'");
    try {
      f->set(cfg, value);
    } catch (const std::string& want) {
      throw ConfigError(where(key) + ": key '" + key + "' must be " + want);
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }
  // 3D cases default to a cube cross-section
  if ((cfg.case_kind == CaseKind::PipeBend3D || cfg.case_kind == CaseKind::HeatSink3D) && !doc.contains("nz"))
    cfg.nz = cfg.ny;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(src + ": " + e.what());
  }
  return cfg;
}

CaseConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  return parse_config(text, path.extension() == ".toml" ? "toml" : "json", path.string());
}

json config_to_json(const CaseConfig& config) {
  json out = json::object();
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out;
}

json make_manifest(std::string_view command, const CaseConfig& config) {
  json m;
  m["manifest_version"] = 1;
  m["tool"] = "lbtopo";
  m["version"] = std::string(kVersion);
  m["command"] = std::string(command);
  m["config"] = config_to_json(config);
  json stencils = json::object();
  for (auto kind : {StencilKind::D2Q9, StencilKind::D3Q19, StencilKind::D3Q7}) {
    const Stencil s = make_stencil(kind);
    json dirs = json::array();
    for (int i = 0; i < s.q(); ++i) {
      const Eigen::Vector3i& e = s.velocity(i);
      dirs.push_back({{"i", i}, {"e", {e.x(), e.y(), e.z()}}, {"w", s.weight(i)}});
    }
    stencils[std::string(to_string(kind))] = {{"cs2", s.cs2()}, {"directions", dirs}};
  }
  m["stencils"] = stencils;
  return m;
}

}  // namespace lbtopo
