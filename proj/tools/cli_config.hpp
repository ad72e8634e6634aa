#pragma once

// Flat sectioned key = value configuration for the command-line tool.
// Values are layered defaults <- file <- flags; every stored value is
// validated and kept in canonical text so an echoed file reloads unchanged.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "subhess/error.hpp"

namespace subhess::cli {

// A rejected value; the message starts with the offending key.
class ConfigError : public RejectedInput {
 public:
  ConfigError(const std::string& key, const std::string& what) : RejectedInput(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class ValueKind {
  text,
  integer,
  real,
  reals,   // comma-separated, non-empty
  point,   // "origin" or comma-separated coordinates
  boolean,
  system,  // built-in name or an existing field-system file
  path,    // empty or an existing file
  polynomials,  // ';'-separated polynomial expressions, parsed at dispatch
  choice,
};

struct KeySpec {
  std::string section;  // "general" or a command name
  std::string key;
  ValueKind kind;
  std::string default_value;
  std::string help;
  // integer and real: lower bound, and whether it is attained.
  double min = -1e308;
  bool min_inclusive = true;
  std::vector<std::string> choices;
};

const std::vector<std::string>& command_names();
// Keys of `section`, in declaration order.
std::vector<const KeySpec*> keys_of(const std::string& section);

class Config {
 public:
  // Defaults for the general section and the command's own section.
  explicit Config(std::string command);

  const std::string& command() const { return command_; }

  // Validates and stores; throws ConfigError naming the key.
  void set(const std::string& section, const std::string& key, const std::string& raw);

  // Reads a file: `[section]` headers, `key = value` lines, '#' comments.
  // Keys before any header belong to [general]. Sections of other commands
  // are validated and then ignored. ParseError carries the line number.
  void merge(std::istream& in, const std::string& source);
  void merge_file(const std::string& path);

  const std::string& get(const std::string& section, const std::string& key) const;
  long integer(const std::string& section, const std::string& key) const;
  double real(const std::string& section, const std::string& key) const;
  std::vector<double> reals(const std::string& section, const std::string& key) const;
  bool boolean(const std::string& section, const std::string& key) const;
  // An empty vector for "origin"; callers expand it to the dimension.
  std::vector<double> point(const std::string& section, const std::string& key) const;
  std::vector<std::string> polynomials(const std::string& section, const std::string& key) const;

  // Canonical file text: the general section, then the command section.
  std::string serialize() const;
  nlohmann::ordered_json to_json() const;

  friend bool operator==(const Config&, const Config&) = default;

 private:
  const KeySpec& spec(const std::string& section, const std::string& key) const;
  std::string command_;
  std::map<std::string, std::map<std::string, std::string>> values_;
};

// Canonical text of a double: shortest representation that round-trips.
std::string format_real(double v);

}  // namespace subhess::cli
