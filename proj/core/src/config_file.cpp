#include "mmpoison/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mmpoison/error.hpp"

namespace mmpoison {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Value text up to an unquoted '#', with surrounding quotes removed.
std::string parse_value(std::string_view raw, const std::string& where) {
  raw = trim(raw);
  if (!raw.empty() && raw.front() == '"') {
    std::string out;
    for (std::size_t i = 1; i < raw.size(); ++i) {
      const char c = raw[i];
      if (c == '\\' && i + 1 < raw.size()) {
        const char n = raw[++i];
        out.push_back(n == 'n' ? '\n' : (n == 't' ? '\t' : n));
      } else if (c == '"') {
        const auto rest = trim(raw.substr(i + 1));
        if (!rest.empty() && rest.front() != '#') {
          throw ConfigError(where + ": unexpected text after quoted value");
        }
        return out;
      } else {
        out.push_back(c);
      }
    }
    throw ConfigError(where + ": unterminated quoted value");
  }
  const auto hash = raw.find('#');
  return std::string(trim(raw.substr(0, hash)));
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, std::string_view origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (body.front() == '[') {
      const auto close = body.find(']');
      if (close == std::string_view::npos) throw ConfigError(where + ": missing ']'");
      section = std::string(trim(body.substr(1, close - 1)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      cfg.values_[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(trim(body.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.has(section, key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.values_[section][key] = parse_value(body.substr(eq + 1), where);
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void ConfigFile::set(const std::string& section, const std::string& key, std::string value) {
  values_[section][key] = std::move(value);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

std::optional<std::string> ConfigFile::raw(const std::string& section,
                                           const std::string& key) const {
  const auto s = values_.find(section);
  if (s == values_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return raw(section, key).value_or(fallback);
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const auto v = raw(section, key);
  if (!v) return fallback;
  // Accept simple fractions such as 8/255.
  const auto slash = v->find('/');
  try {
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const double num = std::stod(v->substr(0, slash));
      const double den = std::stod(v->substr(slash + 1), &used);
      if (used != v->size() - slash - 1 || den == 0.0) throw std::invalid_argument("fraction");
      return num / den;
    }
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + *v +
                      "' is not a number");
  }
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  const auto v = raw(section, key);
  if (!v) return fallback;
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + *v +
                      "' is not an integer");
  }
  return out;
}

std::uint64_t ConfigFile::get_uint64(const std::string& section, const std::string& key,
                                     std::uint64_t fallback) const {
  const auto v = raw(section, key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + *v +
                      "' is not an unsigned integer");
  }
  return out;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const auto v = raw(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + *v + "' is not a boolean");
}

void ConfigFile::require_known(const std::map<std::string, std::set<std::string>>& allowed) const {
  for (const auto& [section, keys] : values_) {
    const auto a = allowed.find(section);
    if (a == allowed.end()) {
      throw ConfigError(origin_ + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      if (a->second.count(key) == 0) {
        throw ConfigError(origin_ + ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
}

}  // namespace mmpoison
