#include "pwacert/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pwacert::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_value(const std::string& raw, const std::string& key) {
  std::string s = trim(raw);
  if (s.empty()) throw std::invalid_argument("config: empty value for key '" + key + "'");
  TomlValue v;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw std::invalid_argument("config: unterminated string for key '" + key + "'");
    v.kind = TomlValue::Kind::kString;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.boolean = s == "true";
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']')
      throw std::invalid_argument("config: unterminated array for key '" + key + "'");
    v.kind = TomlValue::Kind::kArray;
    std::string body = s.substr(1, s.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      size_t pos = 0;
      double d = std::stod(item, &pos);
      if (pos != item.size())
        throw std::invalid_argument("config: bad array element for key '" + key + "'");
      v.array.push_back(d);
    }
    return v;
  }
  size_t pos = 0;
  try {
    v.num = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: cannot parse value for key '" + key + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("config: trailing junk for key '" + key + "'");
  v.kind = TomlValue::Kind::kNumber;
  return v;
}

}  // namespace

TomlTable parse_toml_text(const std::string& text) {
  TomlTable table;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("config: empty section name at line " + std::to_string(lineno));
      table[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    table[section][key] = parse_value(line.substr(eq + 1), key);
  }
  return table;
}

TomlTable parse_toml(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_toml_text(buf.str());
}

namespace {

class SectionReader {
 public:
  SectionReader(const TomlTable& table, const std::string& section) : section_(section) {
    auto it = table.find(section);
    if (it != table.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) const { return entries_ && entries_->count(key) > 0; }

  const TomlValue& get(const std::string& key) {
    used_.insert(key);
    return entries_->at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (v.kind != TomlValue::Kind::kNumber)
      throw std::invalid_argument("config: [" + section_ + "] " + key + " must be a number");
    return v.num;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (v.kind != TomlValue::Kind::kBool)
      throw std::invalid_argument("config: [" + section_ + "] " + key + " must be a boolean");
    return v.boolean;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (v.kind != TomlValue::Kind::kString)
      throw std::invalid_argument("config: [" + section_ + "] " + key + " must be a string");
    return v.str;
  }

  std::vector<double> array(const std::string& key) {
    if (!has(key)) return {};
    const auto& v = get(key);
    if (v.kind != TomlValue::Kind::kArray)
      throw std::invalid_argument("config: [" + section_ + "] " + key + " must be an array");
    return v.array;
  }

  void reject_unknown() const {
    if (!entries_) return;
    for (const auto& [key, _] : *entries_)
      if (used_.count(key) == 0)
        throw std::invalid_argument("config: unknown key '" + key + "' in [" + section_ + "]");
  }

 private:
  std::string section_;
  const std::map<std::string, TomlValue>* entries_ = nullptr;
  std::set<std::string> used_;
};

}  // namespace

RunConfig run_config_from_table(const TomlTable& table, std::string source_text) {
  static const std::set<std::string> kSections = {"system", "surrogate", "alpha",
                                                  "synthesis", "budgets", "outputs", "sim"};
  for (const auto& [name, _] : table)
    if (kSections.count(name) == 0)
      throw std::invalid_argument("config: unknown section [" + name + "]");

  RunConfig cfg;
  cfg.source_text = std::move(source_text);

  SectionReader system(table, "system");
  cfg.system = system.str("name", "");
  cfg.model_path = system.str("model", "");
  system.reject_unknown();
  if (cfg.system.empty() && cfg.model_path.empty())
    throw std::invalid_argument("config: [system] needs name or model");

  SectionReader surrogate(table, "surrogate");
  cfg.width = static_cast<int>(surrogate.number("width", cfg.width));
  cfg.samples = static_cast<int>(surrogate.number("samples", cfg.samples));
  cfg.seed = static_cast<std::uint64_t>(surrogate.number("seed", static_cast<double>(cfg.seed)));
  cfg.weights_path = surrogate.str("weights", "");
  surrogate.reject_unknown();
  if (cfg.width < 1) throw std::invalid_argument("config: [surrogate] width must be >= 1");
  if (cfg.samples < 10 * cfg.width)
    throw std::invalid_argument("config: [surrogate] samples must be >= 10*width");

  SectionReader alpha(table, "alpha");
  cfg.alpha_grid = alpha.array("grid");
  alpha.reject_unknown();
  if (cfg.alpha_grid.empty()) throw std::invalid_argument("config: [alpha] grid must be nonempty");
  for (size_t i = 0; i < cfg.alpha_grid.size(); ++i) {
    if (cfg.alpha_grid[i] <= 0.0)
      throw std::invalid_argument("config: [alpha] grid entries must be positive");
    if (i > 0 && cfg.alpha_grid[i] <= cfg.alpha_grid[i - 1])
      throw std::invalid_argument("config: [alpha] grid must be strictly ascending");
  }

  SectionReader synth(table, "synthesis");
  cfg.synthesis.eps1 = synth.number("eps1", cfg.synthesis.eps1);
  cfg.synthesis.eps2 = synth.number("eps2", cfg.synthesis.eps2);
  cfg.synthesis.eps3 = synth.number("eps3", cfg.synthesis.eps3);
  synth.reject_unknown();
  if (cfg.synthesis.eps1 <= 0 || cfg.synthesis.eps2 <= 0 || cfg.synthesis.eps3 <= 0)
    throw std::invalid_argument("config: [synthesis] tolerances must be positive");

  SectionReader budgets(table, "budgets");
  cfg.budgets.outer_iters = static_cast<int>(budgets.number("outer_iters", cfg.budgets.outer_iters));
  cfg.synthesis.max_refinements =
      static_cast<int>(budgets.number("max_refinements", cfg.synthesis.max_refinements));
  cfg.budgets.wall_clock_s = budgets.number("wall_clock_s", cfg.budgets.wall_clock_s);
  cfg.budgets.restarts = static_cast<int>(budgets.number("restarts", cfg.budgets.restarts));
  budgets.reject_unknown();
  if (cfg.budgets.outer_iters < 1)
    throw std::invalid_argument("config: [budgets] outer_iters must be >= 1");

  SectionReader outputs(table, "outputs");
  cfg.out_dir = outputs.str("dir", cfg.out_dir);
  cfg.emit_svg = outputs.boolean("emit_svg", cfg.emit_svg);
  cfg.emit_csv = outputs.boolean("emit_csv", cfg.emit_csv);
  outputs.reject_unknown();

  SectionReader sim(table, "sim");
  cfg.n_trajectories = static_cast<int>(sim.number("n_trajectories", cfg.n_trajectories));
  cfg.horizon_s = sim.number("horizon_s", cfg.horizon_s);
  cfg.dt = sim.number("dt", cfg.dt);
  sim.reject_unknown();
  if (cfg.dt <= 0 || cfg.dt > 1e-2)
    throw std::invalid_argument("config: [sim] dt must be in (0, 1e-2]");
  if (cfg.n_trajectories < 0)
    throw std::invalid_argument("config: [sim] n_trajectories must be >= 0");

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  std::string text = buf.str();
  return run_config_from_table(parse_toml_text(text), text);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pwacert::config
