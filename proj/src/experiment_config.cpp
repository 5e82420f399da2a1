#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "stratum/experiments.hpp"

namespace stratum::experiments {

ConfigError::ConfigError(int line, const std::string& field, const std::string& what)
    : std::runtime_error("config line " + std::to_string(line) + ", field '" + field + "': " + what),
      line_(line),
      field_(field) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(line, key, "expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& v, int line, const std::string& key) {
  const double d = to_double(v, line, key);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(line, key, "expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

std::vector<double> to_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(line, key, "empty list entry");
    out.push_back(to_double(item, line, key));
  }
  if (out.empty()) throw ConfigError(line, key, "empty list");
  return out;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(line, key, "expected true or false, got '" + v + "'");
}

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

const char* example_name(Example e) {
  switch (e) {
    case Example::Bending: return "bending";
    case Example::VolumeBending: return "volume_bending";
    case Example::Wrinkling: return "wrinkling";
    case Example::Rotation: return "rotation";
    case Example::Laminate: return "laminate";
    case Example::Recovery: return "recovery";
  }
  return "";
}

const char* curve_name(CurveKind c) {
  switch (c) {
    case CurveKind::Straight: return "straight";
    case CurveKind::Circle: return "circle";
    case CurveKind::Wrinkle: return "wrinkle";
  }
  return "";
}

const char* density_name(DensityKind d) {
  switch (d) {
    case DensityKind::Quadratic: return "quadratic";
    case DensityKind::SVK: return "svk";
    case DensityKind::Polyconvex: return "polyconvex";
  }
  return "";
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["n"] = std::to_string(n);
  kv["p"] = format_double(p);
  kv["lambda"] = format_double(lambda);
  kv["eps_list"] = list_text(eps_list);
  kv["example"] = example_name(example);
  kv["curve"] = curve_name(curve);
  kv["wrinkle_amplitude"] = format_double(wrinkle_amplitude);
  kv["beta"] = format_double(beta);
  kv["gamma"] = format_double(gamma);
  kv["F"] = list_text(F);
  kv["rotation_angle"] = format_double(rotation_angle);
  kv["rotation_rate"] = format_double(rotation_rate);
  kv["rotation_curvature"] = format_double(rotation_curvature);
  kv["shear"] = list_text(shear);
  kv["shear_rate"] = list_text(shear_rate);
  kv["quad_cells_per_layer"] = std::to_string(quadrature.cells_per_layer);
  kv["quad_transverse_cells"] = std::to_string(quadrature.transverse_cells);
  kv["quad_gauss"] = std::to_string(quadrature.gauss_points);
  kv["xi_list"] = list_text(xi_list);
  kv["density"] = density_name(density);
  kv["svk_lam"] = format_double(svk.lam);
  kv["svk_mu"] = format_double(svk.mu);
  kv["shear_values"] = list_text(shear_values);
  kv["include_non_admissible"] = include_non_admissible ? "true" : "false";
  kv["cell_m"] = std::to_string(cell.m);
  kv["cell_mn"] = std::to_string(cell.m_n);
  kv["cell_gauss"] = std::to_string(cell.gauss_order);
  kv["cell_restarts"] = std::to_string(cell.restarts);
  kv["cell_max_iterations"] = std::to_string(cell.max_iterations);
  kv["cell_gradient_tol"] = format_double(cell.gradient_tol);
  kv["seed"] = std::to_string(seed);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  bool p_given = false;
  bool curve_given = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ConfigError(line, raw, "expected key = value");
    const std::string key = trim(raw.substr(0, eq));
    const std::string val = trim(raw.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, key, "missing key");
    if (val.empty()) throw ConfigError(line, key, "missing value");
    if (!seen.insert(key).second) throw ConfigError(line, key, "duplicate key");

    if (key == "n") {
      cfg.n = to_int(val, line, key);
      if (cfg.n != 2 && cfg.n != 3) throw ConfigError(line, key, "dimension must be 2 or 3");
    } else if (key == "p") {
      cfg.p = to_double(val, line, key);
      if (!(cfg.p >= 1)) throw ConfigError(line, key, "p must be >= 1");
      p_given = true;
    } else if (key == "lambda") {
      cfg.lambda = to_double(val, line, key);
      if (!(cfg.lambda > 0 && cfg.lambda < 1)) throw ConfigError(line, key, "lambda must lie in (0,1)");
    } else if (key == "eps_list") {
      cfg.eps_list = to_list(val, line, key);
      for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
        if (!(cfg.eps_list[i] > 0 && cfg.eps_list[i] < 1)) throw ConfigError(line, key, "eps must lie in (0,1)");
        if (i && !(cfg.eps_list[i] < cfg.eps_list[i - 1]))
          throw ConfigError(line, key, "eps_list must be strictly decreasing");
      }
    } else if (key == "example") {
      static const std::map<std::string, Example> names{
          {"bending", Example::Bending},   {"volume_bending", Example::VolumeBending},
          {"wrinkling", Example::Wrinkling}, {"rotation", Example::Rotation},
          {"laminate", Example::Laminate}, {"recovery", Example::Recovery}};
      auto it = names.find(val);
      if (it == names.end()) throw ConfigError(line, key, "unknown example '" + val + "'");
      cfg.example = it->second;
    } else if (key == "curve") {
      static const std::map<std::string, CurveKind> names{
          {"straight", CurveKind::Straight}, {"circle", CurveKind::Circle}, {"wrinkle", CurveKind::Wrinkle}};
      auto it = names.find(val);
      if (it == names.end()) throw ConfigError(line, key, "unknown curve '" + val + "'");
      cfg.curve = it->second;
      curve_given = true;
    } else if (key == "wrinkle_amplitude") {
      cfg.wrinkle_amplitude = to_double(val, line, key);
      if (!(cfg.wrinkle_amplitude > 0)) throw ConfigError(line, key, "amplitude must be positive");
    } else if (key == "beta") {
      cfg.beta = to_double(val, line, key);
    } else if (key == "gamma") {
      cfg.gamma = to_double(val, line, key);
      if (!(cfg.gamma > 0 && cfg.gamma < 1)) throw ConfigError(line, key, "gamma must lie in (0,1)");
    } else if (key == "F") {
      cfg.F = to_list(val, line, key);
    } else if (key == "rotation_angle") {
      cfg.rotation_angle = to_double(val, line, key);
    } else if (key == "rotation_rate") {
      cfg.rotation_rate = to_double(val, line, key);
    } else if (key == "rotation_curvature") {
      cfg.rotation_curvature = to_double(val, line, key);
    } else if (key == "shear") {
      cfg.shear = to_list(val, line, key);
    } else if (key == "shear_rate") {
      cfg.shear_rate = to_list(val, line, key);
    } else if (key == "quad_cells_per_layer") {
      cfg.quadrature.cells_per_layer = to_int(val, line, key);
    } else if (key == "quad_transverse_cells") {
      cfg.quadrature.transverse_cells = to_int(val, line, key);
    } else if (key == "quad_gauss") {
      cfg.quadrature.gauss_points = to_int(val, line, key);
    } else if (key == "xi_list") {
      cfg.xi_list = to_list(val, line, key);
      for (double xi : cfg.xi_list)
        if (!(xi > 0)) throw ConfigError(line, key, "shifts must be positive");
    } else if (key == "density") {
      static const std::map<std::string, DensityKind> names{
          {"quadratic", DensityKind::Quadratic}, {"svk", DensityKind::SVK}, {"polyconvex", DensityKind::Polyconvex}};
      auto it = names.find(val);
      if (it == names.end()) throw ConfigError(line, key, "unknown density '" + val + "'");
      cfg.density = it->second;
    } else if (key == "svk_lam") {
      cfg.svk.lam = to_double(val, line, key);
      if (!(cfg.svk.lam > 0)) throw ConfigError(line, key, "must be positive");
    } else if (key == "svk_mu") {
      cfg.svk.mu = to_double(val, line, key);
      if (!(cfg.svk.mu > 0)) throw ConfigError(line, key, "must be positive");
    } else if (key == "shear_values") {
      cfg.shear_values = to_list(val, line, key);
    } else if (key == "include_non_admissible") {
      cfg.include_non_admissible = to_bool(val, line, key);
    } else if (key == "cell_m") {
      cfg.cell.m = to_int(val, line, key);
    } else if (key == "cell_mn") {
      cfg.cell.m_n = to_int(val, line, key);
    } else if (key == "cell_gauss") {
      cfg.cell.gauss_order = to_int(val, line, key);
    } else if (key == "cell_restarts") {
      cfg.cell.restarts = to_int(val, line, key);
    } else if (key == "cell_max_iterations") {
      cfg.cell.max_iterations = to_int(val, line, key);
    } else if (key == "cell_gradient_tol") {
      cfg.cell.gradient_tol = to_double(val, line, key);
    } else if (key == "seed") {
      const int s = to_int(val, line, key);
      if (s < 0) throw ConfigError(line, key, "seed must be nonnegative");
      cfg.seed = static_cast<unsigned>(s);
    } else if (key == "output") {
      cfg.output = val;
    } else {
      throw ConfigError(line, key, "unknown key");
    }
  }

  if (!p_given) cfg.p = cfg.density == DensityKind::SVK ? 4.0 : 2.0;
  if (!curve_given && cfg.example == Example::Wrinkling) cfg.curve = CurveKind::Wrinkle;
  if (cfg.example == Example::Wrinkling && cfg.curve != CurveKind::Wrinkle)
    throw ConfigError(line, "curve", "wrinkling needs the periodic 'wrinkle' curve");
  if (cfg.eps_list.size() < 3) throw ConfigError(line, "eps_list", "need at least three periods");
  const std::size_t nn = static_cast<std::size_t>(cfg.n * cfg.n);
  if (cfg.example == Example::Laminate && cfg.F.size() != nn)
    throw ConfigError(line, "F", "laminate needs n*n matrix entries");
  if (!cfg.F.empty() && cfg.F.size() != nn) throw ConfigError(line, "F", "expected n*n entries");
  if (cfg.shear.empty()) cfg.shear.assign(cfg.n, 0.0);
  if (cfg.shear_rate.empty()) cfg.shear_rate.assign(cfg.n, 0.0);
  if (cfg.shear.size() != static_cast<std::size_t>(cfg.n)) throw ConfigError(line, "shear", "expected n entries");
  if (cfg.shear_rate.size() != static_cast<std::size_t>(cfg.n))
    throw ConfigError(line, "shear_rate", "expected n entries");
  cfg.cell.seed = cfg.seed;
  try {
    cfg.quadrature.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line, "quadrature", e.what());
  }
  try {
    cfg.cell.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line, "cell", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "path", "cannot open '" + path + "'");
  return parse_config(in);
}

}  // namespace stratum::experiments
