#include "cli_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

#include "subhess/fields.hpp"

namespace subhess::cli {

namespace {

using K = ValueKind;
constexpr double kPos = 0.0;

KeySpec positive(std::string section, std::string key, K kind, std::string def, std::string help) {
  return {std::move(section), std::move(key), kind, std::move(def), std::move(help), kPos, false, {}};
}
KeySpec at_least(std::string section, std::string key, K kind, std::string def, std::string help, double min) {
  return {std::move(section), std::move(key), kind, std::move(def), std::move(help), min, true, {}};
}
KeySpec plain(std::string section, std::string key, K kind, std::string def, std::string help) {
  return {std::move(section), std::move(key), kind, std::move(def), std::move(help), -1e308, true, {}};
}
KeySpec choice(std::string section, std::string key, std::string def, std::string help, std::vector<std::string> c) {
  return {std::move(section), std::move(key), K::choice, std::move(def), std::move(help), -1e308, true, std::move(c)};
}

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = [] {
    std::vector<KeySpec> v;
    v.push_back(plain("general", "system", K::system, "heisenberg1", "built-in system name or field-system file"));
    v.push_back(at_least("general", "seed", K::integer, "1", "master seed", 0));
    v.push_back(plain("general", "out", K::text, "reports", "report directory"));

    const std::string cs = "check-system";
    v.push_back(at_least(cs, "samples", K::integer, "16", "sample points for the numeric tests", 1));
    v.push_back(positive(cs, "sample_radius", K::real, "1", "sample points are uniform in [-r, r]^n"));
    v.push_back(at_least(cs, "max_step", K::integer, "4", "longest bracket in the rank test", 1));

    const std::string vi = "verify-identities";
    v.push_back(plain(vi, "corpus", K::text, "random4", "random<d>: random polynomials of degree <= d"));
    v.push_back(at_least(vi, "corpus_size", K::integer, "20", "number of polynomials", 1));
    v.push_back(at_least(vi, "terms", K::integer, "8", "terms drawn per polynomial", 1));

    const std::string kc = "kconvex";
    v.push_back(plain(kc, "u", K::polynomials, "x1^2 + x2^2 + x3^2", "polynomial to test"));
    v.push_back(at_least(kc, "k", K::integer, "2", "convexity order", 1));
    v.push_back(at_least(kc, "samples", K::integer, "200", "sample points", 1));
    v.push_back(positive(kc, "sample_radius", K::real, "1", "sample points are uniform in [-r, r]^n"));
    v.push_back(at_least(kc, "tol", K::real, "1e-09", "accepted negative part of S_j", 0));

    const std::string wc = "weak-continuity";
    v.push_back(plain(wc, "target", K::polynomials,
                      "1/2*x1^2 + 1/2*x2^2; 1/2*x1^2 + 1/2*x2^2 - 1/10*x1 + 1/4*x3",
                      "pieces of the target max(p1; p2; ...)"));
    v.push_back(plain(wc, "eta_center", K::point, "origin", "centre of the cutoff bump"));
    v.push_back(positive(wc, "eta_rho", K::real, "0.4", "radius of the cutoff bump"));
    v.push_back(positive(wc, "h", K::real, "0.0125", "lattice spacing"));
    v.push_back(positive(wc, "eps_ladder", K::reals, "0.2, 0.1, 0.05, 0.025", "decreasing mollification radii"));
    v.push_back(plain(wc, "alpha", K::reals, "0, 0.25, 0.75", "coefficients of E_2 in the pairing"));
    v.push_back(at_least(wc, "margin_tol", K::real, "1e-06", "accepted negative 2-convexity margin", 0));
    v.push_back(plain(wc, "error_estimates", K::boolean, "false", "also pair at spacing 2h"));

    const std::string mo = "monotonicity";
    v.push_back(plain(mo, "u", K::polynomials, "x1^2 + x2^2 + x3^2", "lower function"));
    v.push_back(plain(mo, "v", K::polynomials, "", "upper function; empty means u + bump_scale * bump"));
    v.push_back(positive(mo, "bump_scale", K::real, "0.1", "height factor of the default bump"));
    v.push_back(at_least(mo, "bump_order", K::integer, "1", "vanishing order of the bump on the sphere", 1));
    v.push_back(plain(mo, "center", K::point, "origin", "centre of the ball domain"));
    v.push_back(positive(mo, "radius", K::real, "0.5", "radius of the ball domain"));
    v.push_back(choice(mo, "operator", "f2", "f2 or f2_star", {"f2", "f2_star"}));
    v.push_back(at_least(mo, "coarse_per_axis", K::integer, "16", "coarse quadrature resolution", 2));

    const std::string lb = "local-bounds";
    v.push_back(plain(lb, "u", K::polynomials, "x1^2 + x2^2 + x3^2", "polynomial input"));
    v.push_back(plain(lb, "grid", K::path, "", "grid-function file; overrides u"));
    v.push_back(plain(lb, "center", K::point, "origin", "common centre of the two cubes"));
    v.push_back(positive(lb, "inner_half", K::real, "0.25", "half-width of the inner cube"));
    v.push_back(positive(lb, "outer_half", K::real, "0.5", "half-width of the outer cube"));
    v.push_back(at_least(lb, "k", K::integer, "2", "convexity order", 1));
    v.push_back(at_least(lb, "q", K::real, "2", "gradient exponent", 1));
    v.push_back(at_least(lb, "r", K::real, "1", "energy exponent", 0));
    v.push_back(at_least(lb, "Q", K::integer, "0", "homogeneous dimension; 0 uses the system's", 0));
    v.push_back(at_least(lb, "convexity_tol", K::real, "1e-06", "relative k-convexity tolerance", 0));
    v.push_back(positive(lb, "h", K::real, "0.025", "lattice spacing for polynomial input"));

    const std::string cc = "cc-geometry";
    v.push_back(plain(cc, "center", K::point, "origin", "ball centre"));
    v.push_back(positive(cc, "radii", K::reals, "0.5, 1, 2", "increasing radii spanning a factor >= 4"));
    v.push_back(at_least(cc, "samples", K::integer, "2000", "Monte Carlo samples per radius", 1000));
    v.push_back(at_least(cc, "explore_paths", K::integer, "512", "control sequences sizing the bounding box", 1));
    v.push_back(at_least(cc, "coarse_segments", K::integer, "16", "segments per membership path", 1));
    v.push_back(at_least(cc, "coarse_restarts", K::integer, "4", "restarts per membership test", 0));
    v.push_back(at_least(cc, "coarse_iterations", K::integer, "60", "iterations per membership start", 1));
    v.push_back(plain(cc, "target", K::point, "", "optional point: also estimate d(center, target)"));
    v.push_back(at_least(cc, "segments", K::integer, "32", "segments of the distance path", 1));
    v.push_back(at_least(cc, "restarts", K::integer, "8", "restarts per horizon", 0));
    v.push_back(at_least(cc, "iterations", K::integer, "100", "iterations per start", 1));

    const std::string ex = "exponents";
    v.push_back(at_least(ex, "k", K::integer, "2", "convexity order", 1));
    v.push_back(at_least(ex, "m", K::integer, "0", "number of fields; 0 uses the system's", 0));
    v.push_back(at_least(ex, "Q", K::integer, "0", "homogeneous dimension; 0 uses the system's", 0));
    return v;
  }();
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> parse_integer(const std::string& s) {
  long v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

void check_min(const KeySpec& k, double v) {
  if (k.min_inclusive ? v < k.min : v <= k.min) {
    const std::string bound = format_real(k.min);
    throw ConfigError(k.key, k.min_inclusive ? "must be at least " + bound : "must be greater than " + bound);
  }
}

std::string canonical(const KeySpec& k, const std::string& raw) {
  const std::string s = trim(raw);
  switch (k.kind) {
    case K::text:
      return s;
    case K::integer: {
      const auto v = parse_integer(s);
      if (!v) throw ConfigError(k.key, "expected an integer, got '" + s + "'");
      check_min(k, static_cast<double>(*v));
      return std::to_string(*v);
    }
    case K::real: {
      const auto v = parse_real(s);
      if (!v) throw ConfigError(k.key, "expected a number, got '" + s + "'");
      check_min(k, *v);
      return format_real(*v);
    }
    case K::reals:
    case K::point: {
      if (k.kind == K::point && (s == "origin" || s.empty())) return s;
      std::string out;
      for (const auto& part : split(s, ',')) {
        const auto v = parse_real(part);
        if (!v) throw ConfigError(k.key, "expected a comma-separated list of numbers, got '" + s + "'");
        if (k.kind == K::reals) check_min(k, *v);
        out += (out.empty() ? "" : ", ") + format_real(*v);
      }
      if (out.empty()) throw ConfigError(k.key, "expected at least one number");
      return out;
    }
    case K::boolean:
      if (s == "true" || s == "yes" || s == "on" || s == "1") return "true";
      if (s == "false" || s == "no" || s == "off" || s == "0") return "false";
      throw ConfigError(k.key, "expected true or false, got '" + s + "'");
    case K::system:
      if (is_builtin_name(s)) return s;
      if (!s.empty() && std::filesystem::is_regular_file(s)) return s;
      throw ConfigError(k.key, "'" + s + "' is neither a built-in system nor an existing file");
    case K::path:
      if (s.empty() || std::filesystem::is_regular_file(s)) return s;
      throw ConfigError(k.key, "file '" + s + "' does not exist");
    case K::polynomials: {
      std::string out;
      for (const auto& part : split(s, ';')) {
        if (part.empty()) throw ConfigError(k.key, "empty polynomial in '" + s + "'");
        out += (out.empty() ? "" : "; ") + part;
      }
      return out;
    }
    case K::choice:
      if (std::find(k.choices.begin(), k.choices.end(), s) == k.choices.end()) {
        std::string opts;
        for (const auto& c : k.choices) opts += (opts.empty() ? "" : ", ") + c;
        throw ConfigError(k.key, "expected one of " + opts + ", got '" + s + "'");
      }
      return s;
  }
  return s;
}

const KeySpec* find_spec(const std::string& section, const std::string& key) {
  for (const auto& k : schema())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> c{"check-system", "verify-identities", "kconvex",     "weak-continuity",
                                          "monotonicity", "local-bounds",      "cc-geometry", "exponents"};
  return c;
}

std::vector<const KeySpec*> keys_of(const std::string& section) {
  std::vector<const KeySpec*> out;
  for (const auto& k : schema())
    if (k.section == section) out.push_back(&k);
  return out;
}

Config::Config(std::string command) : command_(std::move(command)) {
  if (std::find(command_names().begin(), command_names().end(), command_) == command_names().end())
    throw RejectedInput("unknown command '" + command_ + "'");
  for (const auto& k : schema())
    if (k.section == "general" || k.section == command_) values_[k.section][k.key] = k.default_value;
}

const KeySpec& Config::spec(const std::string& section, const std::string& key) const {
  const KeySpec* k = find_spec(section, key);
  if (!k) {
    const std::string name = section == "general" ? key : section + "." + key;
    throw ConfigError(name, "unknown key");
  }
  return *k;
}

void Config::set(const std::string& section, const std::string& key, const std::string& raw) {
  const auto& k = spec(section, key);
  const std::string v = canonical(k, raw);
  if (section == "general" || section == command_) values_[section][key] = v;
}

void Config::merge(std::istream& in, const std::string& source) {
  std::string line;
  std::string section = "general";
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(source + ": unterminated section header", no);
      section = trim(t.substr(1, t.size() - 2));
      const auto& c = command_names();
      if (section != "general" && std::find(c.begin(), c.end(), section) == c.end())
        throw ParseError(source + ": unknown section [" + section + "]", no);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(source + ": expected `key = value`", no);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError(source + ": missing key before '='", no);
    try {
      set(section, key, t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(e.key(), std::string(e.what()).substr(e.key().size() + 2) + " (" + source + " line " +
                                     std::to_string(no) + ")");
    }
  }
}

void Config::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  merge(in, path);
}

const std::string& Config::get(const std::string& section, const std::string& key) const {
  spec(section, key);
  const auto s = values_.find(section);
  if (s == values_.end() || !s->second.count(key)) throw ConfigError(key, "not available for " + command_);
  return s->second.at(key);
}

long Config::integer(const std::string& section, const std::string& key) const {
  return *parse_integer(get(section, key));
}

double Config::real(const std::string& section, const std::string& key) const { return *parse_real(get(section, key)); }

std::vector<double> Config::reals(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  const auto& v = get(section, key);
  if (v.empty() || v == "origin") return out;
  for (const auto& part : split(v, ',')) out.push_back(*parse_real(part));
  return out;
}

bool Config::boolean(const std::string& section, const std::string& key) const { return get(section, key) == "true"; }

std::vector<double> Config::point(const std::string& section, const std::string& key) const {
  return reals(section, key);
}

std::vector<std::string> Config::polynomials(const std::string& section, const std::string& key) const {
  const auto& v = get(section, key);
  if (v.empty()) return {};
  return split(v, ';');
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const std::string& section : {std::string("general"), command_}) {
    out << '[' << section << "]\n";
    for (const auto* k : keys_of(section)) out << k->key << " = " << values_.at(section).at(k->key) << '\n';
    if (section == "general") out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json Config::to_json() const {
  nlohmann::ordered_json j;
  for (const std::string& section : {std::string("general"), command_}) {
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto* k : keys_of(section)) s[k->key] = values_.at(section).at(k->key);
    j[section] = s;
  }
  return j;
}

}  // namespace subhess::cli
