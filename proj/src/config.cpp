#include "mbo/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "mbo/errors.hpp"
#include "mbo/probes.hpp"

namespace mbo {

namespace {

using Json = nlohmann::json;

struct Entry {
  Json value;
  int line = 0;
};
using Section = std::map<std::string, Entry>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing `#` comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (!quoted && s[i] == '#') return s.substr(0, i);
  }
  return s;
}

Json parse_value(const std::string& raw, int line) {
  if (raw.empty()) throw ParseError(fmt::format("line {}: missing value", line));
  const char c = raw.front();
  const bool structured = c == '[' || c == '"' || c == '-' || c == '.' || (c >= '0' && c <= '9');
  if (!structured) return Json(raw);
  std::string text = raw;
  if (c == '.') text = "0" + text;
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    throw ParseError(fmt::format("line {}: malformed value '{}'", line, raw));
  }
}

std::map<std::string, Section> tokenize(std::string_view text) {
  std::map<std::string, Section> out;
  std::string current;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty() || s.front() == ';') continue;
    if (s.front() == '[' && s.find('=') == std::string::npos) {
      if (s.back() != ']') throw ParseError(fmt::format("line {}: unterminated section header", line));
      current = trim(std::string_view(s).substr(1, s.size() - 2));
      if (current.empty()) throw ParseError(fmt::format("line {}: empty section name", line));
      out[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(fmt::format("line {}: expected 'key = value'", line));
    if (current.empty()) throw ParseError(fmt::format("line {}: key outside of any [section]", line));
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (key.empty()) throw ParseError(fmt::format("line {}: empty key", line));
    auto& section = out[current];
    if (section.count(key)) throw ParseError(fmt::format("line {}: duplicate key '{}.{}'", line, current, key));
    section[key] = {parse_value(trim(std::string_view(s).substr(eq + 1)), line), line};
  }
  return out;
}

class Reader {
 public:
  Reader(std::string name, Section section) : name_(std::move(name)), section_(std::move(section)) {}

  std::string path(const std::string& key) const { return name_ + "." + key; }
  bool has(const std::string& key) const { return section_.count(key) > 0; }
  const Json& raw(const std::string& key) {
    const auto it = section_.find(key);
    if (it == section_.end()) throw ConfigError(fmt::format("{}: missing", path(key)));
    used_.push_back(key);
    return it->second.value;
  }
  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", path(key)));
    return v.get<double>();
  }
  std::int64_t integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", path(key)));
    return v.get<std::int64_t>();
  }
  std::string word(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(fmt::format("{}: expected a word or string", path(key)));
    return v.get<std::string>();
  }
  Matrix matrix(const std::string& key, int n) {
    const Json& v = raw(key);
    if (v.is_number()) {
      Matrix m = Matrix::Constant(n, n, v.get<double>());
      m.diagonal().setZero();
      return m;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      throw ConfigError(fmt::format("{}: expected {} rows of {} numbers (or one number)", path(key), n, n));
    }
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      const Json& row = v[i];
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        throw ConfigError(fmt::format("{}: row {} must hold {} numbers (material.N = {})", path(key), i, n, n));
      }
      for (int j = 0; j < n; ++j) {
        if (!row[j].is_number()) throw ConfigError(fmt::format("{}[{}][{}]: expected a number", path(key), i, j));
        m(i, j) = row[j].get<double>();
      }
    }
    return m;
  }
  /// Keys that were never read.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [key, entry] : section_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) out.push_back(key);
    return out;
  }
  void reject_unused() const {
    const auto extra = unused();
    if (!extra.empty()) throw ConfigError(fmt::format("{}: unknown key", path(extra.front())));
  }

 private:
  std::string name_;
  Section section_;
  std::vector<std::string> used_;
};

std::string format_matrix(const Matrix& m) {
  std::vector<std::string> rows;
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<std::string> entries;
    for (int j = 0; j < m.cols(); ++j) entries.push_back(fmt::format("{:.17g}", m(i, j)));
    rows.push_back(fmt::format("[{}]", fmt::join(entries, ", ")));
  }
  return fmt::format("[{}]", fmt::join(rows, ", "));
}

}  // namespace

KernelCoefficients RunConfig::coefficients() const {
  return certify(material, compute_coefficients(material, scales.gamma, scales.beta));
}

RunConfig parse_config(std::string_view text) {
  auto sections = tokenize(text);
  static const std::vector<std::string> known = {"material", "scales", "grid", "scheme", "initial", "output"};
  for (const auto& [name, section] : sections) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError(fmt::format("{}: unknown section (expected one of: {})", name, fmt::join(known, ", ")));
    }
  }
  auto reader = [&](const std::string& name) { return Reader(name, sections[name]); };
  RunConfig cfg;

  Reader material = reader("material");
  const std::int64_t n = material.integer("N");
  if (n < 2 || n > kMaxPhases) throw ConfigError(fmt::format("material.N: {} not in [2, {}]", n, kMaxPhases));
  const Matrix sigma = material.matrix("sigma", static_cast<int>(n));
  const Matrix mu = material.matrix("mu", static_cast<int>(n));
  material.reject_unused();
  try {
    cfg.material = MaterialSpec::from_matrices(sigma, mu);
    cfg.material.check();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  Reader scales = reader("scales");
  const bool has_gamma = scales.has("gamma");
  const bool has_beta = scales.has("beta");
  auto is_auto = [&](const char* key) {
    const Json& v = scales.raw(key);
    return v.is_string() && v.get<std::string>() == "auto";
  };
  const bool gamma_auto = !has_gamma || is_auto("gamma");
  const bool beta_auto = !has_beta || is_auto("beta");
  if (gamma_auto != beta_auto) throw ConfigError("scales: gamma and beta must both be numbers or both be auto");
  if (gamma_auto) {
    try {
      cfg.scales = suggest_scales(cfg.material);
    } catch (const Error& e) {
      throw ConfigError(fmt::format("scales: no admissible automatic scales: {}", e.what()));
    }
    cfg.auto_scales = true;
  } else {
    cfg.scales = {scales.number("gamma"), scales.number("beta")};
    cfg.auto_scales = false;
    if (!(cfg.scales.gamma > cfg.scales.beta && cfg.scales.beta > 0.0)) {
      throw ConfigError(fmt::format("scales.gamma: need gamma > beta > 0, got gamma={} beta={}", cfg.scales.gamma,
                                    cfg.scales.beta));
    }
  }
  scales.reject_unused();

  Reader grid = reader("grid");
  std::vector<int> sizes;
  const Json& sz = grid.raw("sizes");
  const std::int64_t dim = grid.has("dim") ? grid.integer("dim") : (sz.is_array() ? static_cast<std::int64_t>(sz.size()) : 2);
  if (dim != 2 && dim != 3) throw ConfigError(fmt::format("grid.dim: {} not in {{2, 3}}", dim));
  if (sz.is_number_integer()) {
    sizes.assign(static_cast<std::size_t>(dim), sz.get<int>());
  } else if (sz.is_array() && static_cast<std::int64_t>(sz.size()) == dim) {
    for (const auto& v : sz) {
      if (!v.is_number_integer()) throw ConfigError("grid.sizes: expected integers");
      sizes.push_back(v.get<int>());
    }
  } else {
    throw ConfigError(fmt::format("grid.sizes: expected {} integers", dim));
  }
  grid.reject_unused();
  try {
    cfg.grid = GridSpec::make(sizes, kMinSimulationSize);
  } catch (const Error& e) {
    throw ConfigError(fmt::format("grid.sizes: {}", e.what()));
  }

  Reader scheme = reader("scheme");
  cfg.scheme.h = scheme.number("h");
  if (!(cfg.scheme.h > 0.0)) throw ConfigError("scheme.h: must be positive");
  cfg.scheme.steps = scheme.has("steps") ? scheme.integer("steps") : 1;
  if (cfg.scheme.steps < 0) throw ConfigError("scheme.steps: must be non-negative");
  if (scheme.has("tie_break")) cfg.scheme.tie_break = parse_tie_break(scheme.word("tie_break"));
  cfg.scheme.record_every = scheme.has("record_every") ? scheme.integer("record_every") : 0;
  if (cfg.scheme.record_every < 0) throw ConfigError("scheme.record_every: must be non-negative");
  scheme.reject_unused();

  Reader initial = reader("initial");
  cfg.initial.preset = initial.word("preset");
  const auto params = preset_parameters(cfg.initial.preset);
  if (initial.has("seed")) {
    const std::int64_t seed = initial.integer("seed");
    if (seed < 0) throw ConfigError("initial.seed: must be non-negative");
    cfg.initial.seed = static_cast<std::uint64_t>(seed);
  }
  if (initial.has("path")) cfg.initial.path = initial.word("path");
  for (const auto& key : params) {
    if (initial.has(key)) cfg.initial.params[key] = initial.number(key);
  }
  const auto extra = initial.unused();
  if (!extra.empty()) {
    throw ConfigError(fmt::format("initial.{}: not a parameter of preset '{}' (accepted: {})", extra.front(),
                                  cfg.initial.preset, fmt::join(params, ", ")));
  }

  Reader output = reader("output");
  if (output.has("dir")) cfg.output_dir = output.word("dir");
  if (output.has("probes")) {
    const Json& p = output.raw("probes");
    if (!p.is_array()) throw ConfigError("output.probes: expected a list of strings");
    for (const auto& v : p) {
      if (!v.is_string()) throw ConfigError("output.probes: expected a list of strings");
      cfg.probes.push_back(v.get<std::string>());
      parse_probe(cfg.probes.back(), cfg.material.num_phases);
    }
  }
  output.reject_unused();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string RunConfig::echo() const {
  std::string out;
  out += "[material]\n";
  out += fmt::format("N = {}\n", material.num_phases);
  out += fmt::format("sigma = {}\n", format_matrix(material.sigma));
  out += fmt::format("mu = {}\n", format_matrix(material.mu));
  out += "\n[scales]\n";
  if (auto_scales) out += "# resolved automatically\n";
  out += fmt::format("gamma = {:.17g}\nbeta = {:.17g}\n", scales.gamma, scales.beta);
  out += "\n[grid]\n";
  out += fmt::format("dim = {}\n", grid.dim);
  std::vector<int> sizes(grid.sizes.begin(), grid.sizes.begin() + grid.dim);
  out += fmt::format("sizes = [{}]\n", fmt::join(sizes, ", "));
  out += "\n[scheme]\n";
  out += fmt::format("h = {:.17g}\nsteps = {}\ntie_break = {}\nrecord_every = {}\n", scheme.h, scheme.steps,
                     to_string(scheme.tie_break), scheme.record_every);
  out += "\n[initial]\n";
  out += fmt::format("preset = {}\nseed = {}\n", initial.preset, initial.seed);
  if (!initial.path.empty()) out += fmt::format("path = {}\n", Json(initial.path).dump());
  for (const auto& [key, value] : initial.params) out += fmt::format("{} = {:.17g}\n", key, value);
  out += "\n[output]\n";
  out += fmt::format("dir = {}\n", Json(output_dir).dump());
  if (!probes.empty()) out += fmt::format("probes = {}\n", Json(probes).dump());
  return out;
}

}  // namespace mbo
