#include "stac/cli/ini.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace stac::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigParseError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

const IniEntry* IniSection::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

std::vector<IniSection> parse_ini(const std::string& text) {
  std::vector<IniSection> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto cut = raw.find_first_of("#;");
    const std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      IniSection sec;
      sec.name = trim(s.substr(1, s.size() - 2));
      sec.line = line;
      if (sec.name.empty()) fail(line, "empty section name");
      if (!seen.insert(sec.name).second) fail(line, "duplicate section [" + sec.name + "]");
      out.push_back(std::move(sec));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    IniEntry e{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    if (e.key.empty()) fail(line, "empty key");
    if (out.empty()) out.push_back(IniSection{"", 0, {}});
    if (out.back().find(e.key)) fail(line, "duplicate key '" + e.key + "'");
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

std::vector<IniSection> read_ini(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigParseError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_ini(ss.str());
}

}  // namespace stac::cli
