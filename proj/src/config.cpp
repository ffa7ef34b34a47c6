#include "calderon/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace calderon {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& k) {
  size_t dot = k.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == k.size()) return false;
  for (char c : k)
    if (!std::isalnum((unsigned char)c) && c != '.' && c != '_') return false;
  return k.find('.', dot + 1) == std::string::npos;
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

RunConfig RunConfig::parse_string(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    std::ostringstream where;
    where << origin << ":" << lineno;
    if (eq == std::string::npos)
      throw ConfigError(where.str() + ": expected `section.key = value`, got `" + t + "`");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError(where.str() + ": key `" + key + "` is not of the form section.key");
    if (value.empty()) throw ConfigError(where.str() + ": key `" + key + "` has no value");
    auto it = cfg.entries_.find(key);
    if (it != cfg.entries_.end()) {
      std::ostringstream os;
      os << where.str() << ": duplicate key `" << key << "` (first set on line "
         << it->second.line << ")";
      throw ConfigError(os.str());
    }
    cfg.entries_[key] = Entry{value, lineno, false};
  }
  return cfg;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

void RunConfig::missing(const std::string& key) const {
  throw ConfigError(origin_ + ": missing required key `" + key + "`");
}

const RunConfig::Entry& RunConfig::find(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) missing(key);
  it->second.consumed = true;
  return it->second;
}

std::string RunConfig::require_string(const std::string& key) { return find(key).value; }

double RunConfig::require_real(const std::string& key) {
  const Entry& e = find(key);
  const char* s = e.value.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') {
    std::ostringstream os;
    os << origin_ << ":" << e.line << ": key `" << key << "` = `" << e.value
       << "` is not a number";
    throw ConfigError(os.str());
  }
  return v;
}

int RunConfig::require_int(const std::string& key) {
  const Entry& e = find(key);
  const char* s = e.value.c_str();
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0') {
    std::ostringstream os;
    os << origin_ << ":" << e.line << ": key `" << key << "` = `" << e.value
       << "` is not an integer";
    throw ConfigError(os.str());
  }
  return (int)v;
}

std::vector<double> RunConfig::require_reals(const std::string& key) {
  const Entry& e = find(key);
  std::vector<double> out;
  std::istringstream in(e.value);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    const char* s = t.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (t.empty() || end == s || *end != '\0') {
      std::ostringstream os;
      os << origin_ << ":" << e.line << ": key `" << key << "` has a malformed list entry `" << t
         << "`";
      throw ConfigError(os.str());
    }
    out.push_back(v);
  }
  if (out.empty()) {
    std::ostringstream os;
    os << origin_ << ":" << e.line << ": key `" << key << "` is an empty list";
    throw ConfigError(os.str());
  }
  return out;
}

std::string RunConfig::get_string(const std::string& key, const std::string& dflt) {
  return has(key) ? require_string(key) : dflt;
}

double RunConfig::get_real(const std::string& key, double dflt) {
  return has(key) ? require_real(key) : dflt;
}

int RunConfig::get_int(const std::string& key, int dflt) {
  return has(key) ? require_int(key) : dflt;
}

void RunConfig::fail_unconsumed() const {
  for (const auto& [key, e] : entries_) {
    if (!e.consumed) {
      std::ostringstream os;
      os << origin_ << ":" << e.line << ": unknown key `" << key
         << "` (unused by this subcommand)";
      throw ConfigError(os.str());
    }
  }
}

}  // namespace calderon
