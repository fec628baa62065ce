#include "acbem/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "acbem/error.hpp"

namespace acbem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg, line);
}

std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] == '"') quoted = !quoted;
    if (s[k] == '#' && !quoted) return s.substr(0, k);
  }
  return s;
}

double number(const std::string& v, int line, const std::string& key) {
  double x = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && *first == '+') ++first;
  const auto r = std::from_chars(first, last, x);
  if (r.ec != std::errc() || r.ptr != last || !std::isfinite(x))
    fail(line, "'" + key + "' expects a number, got '" + v + "'");
  return x;
}

int integer(const std::string& v, int line, const std::string& key) {
  const double x = number(v, line, key);
  if (x != std::floor(x) || std::abs(x) > 1e9) fail(line, "'" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(x);
}

std::string string_value(const std::string& v, int line, const std::string& key) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"')
    fail(line, "'" + key + "' expects a quoted string, got '" + v + "'");
  return v.substr(1, v.size() - 2);
}

bool boolean(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> number_list(const std::string& v, int line, const std::string& key) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    fail(line, "'" + key + "' expects a list like [4, 8, 16], got '" + v + "'");
  std::vector<double> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, "'" + key + "' has an empty list entry");
    out.push_back(number(item, line, key));
  }
  if (out.empty()) fail(line, "'" + key + "' must not be empty");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"potential.beta", [](auto& c, auto& v, int l, auto& k) { c.beta = number(v, l, k); }},
      {"potential.delta", [](auto& c, auto& v, int l, auto& k) { c.delta = number(v, l, k); }},
      {"defect.alpha", [](auto& c, auto& v, int l, auto& k) { c.alpha = number(v, l, k); }},
      {"study.K", [](auto& c, auto& v, int l, auto& k) { c.K = number_list(v, l, k); }},
      {"study.N_policy",
       [](auto& c, auto& v, int l, auto& k) {
         const std::string s = string_value(v, l, k);
         if (s == "offset") c.n_policy = NPolicy::Offset;
         else if (s == "ratio") c.n_policy = NPolicy::Ratio;
         else fail(l, "'" + k + "' must be \"offset\" or \"ratio\", got \"" + s + "\"");
       }},
      {"study.N_offset", [](auto& c, auto& v, int l, auto& k) { c.n_offset = number(v, l, k); }},
      {"study.N_ratio", [](auto& c, auto& v, int l, auto& k) { c.n_ratio = number(v, l, k); }},
      {"reference.R_ref", [](auto& c, auto& v, int l, auto& k) { c.R_ref = number(v, l, k); }},
      {"reference.tol", [](auto& c, auto& v, int l, auto& k) { c.reference_tol = number(v, l, k); }},
      {"reference.guard", [](auto& c, auto& v, int l, auto& k) { c.contamination_guard = boolean(v, l, k); }},
      {"reference.cache_dir", [](auto& c, auto& v, int l, auto& k) { c.cache_dir = string_value(v, l, k); }},
      {"solver.tol", [](auto& c, auto& v, int l, auto& k) { c.solver_tol = number(v, l, k); }},
      {"solver.max_iterations", [](auto& c, auto& v, int l, auto& k) { c.max_iterations = integer(v, l, k); }},
      {"output.dir", [](auto& c, auto& v, int l, auto& k) { c.out_dir = string_value(v, l, k); }},
      {"output.seed",
       [](auto& c, auto& v, int l, auto& k) {
         const int s = integer(v, l, k);
         if (s < 0) fail(l, "'" + k + "' must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
  };
  return table;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

double ExperimentConfig::N_for(double k) const {
  return n_policy == NPolicy::Offset ? k + n_offset : n_ratio * k;
}

double ExperimentConfig::max_N() const {
  double m = 0.0;
  for (double k : K) m = std::max(m, N_for(k));
  return m;
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string raw, section;
  std::map<std::string, int> seen;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) fail(line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "missing key");
    if (value.empty()) fail(line, "missing value for '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) fail(line, "unknown key '" + full + "'");
    if (const auto prev = seen.find(full); prev != seen.end())
      fail(line, "duplicate key '" + full + "' (first set on line " + std::to_string(prev->second) + ")");
    seen[full] = line;
    it->second(cfg, value, line, full);
  }
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "default") return ExperimentConfig{};
  std::ifstream is(name_or_path);
  if (!is) throw ConfigError("cannot open config file '" + name_or_path + "'");
  return parse_config(is);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.K.empty()) throw ConfigError("study.K must list at least one K");
  for (double k : cfg.K) {
    if (!(k >= 2.0)) throw ConfigError("study.K: K = " + fmt(k) + " is below 2");
    if (cfg.N_for(k) < k) throw ConfigError("N(K) = " + fmt(cfg.N_for(k)) + " is below K = " + fmt(k));
  }
  if (!std::is_sorted(cfg.K.begin(), cfg.K.end()) ||
      std::adjacent_find(cfg.K.begin(), cfg.K.end()) != cfg.K.end())
    throw ConfigError("study.K must be strictly increasing");
  if (cfg.R_ref < 8.0 * cfg.max_N())
    throw ConfigError("reference.R_ref = " + fmt(cfg.R_ref) + " is below 8 max N = " + fmt(8.0 * cfg.max_N()));
  if (!(cfg.solver_tol > 0.0) || !(cfg.reference_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (cfg.max_iterations < 1) throw ConfigError("solver.max_iterations must be at least 1");
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[potential]\nbeta = " << fmt(cfg.beta) << "\ndelta = " << fmt(cfg.delta) << "\n\n";
  os << "[defect]\nalpha = " << fmt(cfg.alpha) << "\n\n";
  os << "[study]\nK = [";
  for (std::size_t k = 0; k < cfg.K.size(); ++k) os << (k ? ", " : "") << fmt(cfg.K[k]);
  os << "]\nN_policy = \"" << (cfg.n_policy == NPolicy::Offset ? "offset" : "ratio") << "\"\n";
  os << "N_offset = " << fmt(cfg.n_offset) << "\nN_ratio = " << fmt(cfg.n_ratio) << "\n\n";
  os << "[reference]\nR_ref = " << fmt(cfg.R_ref) << "\ntol = " << fmt(cfg.reference_tol)
     << "\nguard = " << (cfg.contamination_guard ? "true" : "false") << "\ncache_dir = \"" << cfg.cache_dir
     << "\"\n\n";
  os << "[solver]\ntol = " << fmt(cfg.solver_tol) << "\nmax_iterations = " << cfg.max_iterations << "\n\n";
  os << "[output]\ndir = \"" << cfg.out_dir << "\"\nseed = " << cfg.seed << "\n";
  return os.str();
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {
      {"beta", cfg.beta},
      {"delta", cfg.delta},
      {"alpha", cfg.alpha},
      {"K", cfg.K},
      {"N_policy", cfg.n_policy == NPolicy::Offset ? "offset" : "ratio"},
      {"N_offset", cfg.n_offset},
      {"N_ratio", cfg.n_ratio},
      {"R_ref", cfg.R_ref},
      {"reference_tol", cfg.reference_tol},
      {"contamination_guard", cfg.contamination_guard},
      {"cache_dir", cfg.cache_dir},
      {"solver_tol", cfg.solver_tol},
      {"max_iterations", cfg.max_iterations},
      {"out_dir", cfg.out_dir},
      {"seed", cfg.seed},
  };
}

}  // namespace acbem
