#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stac::cli {

class ConfigParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(const std::string& key) const;
};

/// Flat `key = value` text under `[section]` headers. `#` and `;` start
/// comments. Entries before the first header land in a section named "".
std::vector<IniSection> parse_ini(const std::string& text);
std::vector<IniSection> read_ini(const std::string& path);

}  // namespace stac::cli
