#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace mmpoison {

/// Minimal INI/TOML-style key-value file:
///
///   # comment
///   [section]
///   key = value        # trailing comment
///   name = "quoted # value"
///
/// Keys before any section header live in section "". Values are kept as
/// strings; the typed getters convert and raise ConfigError on bad input.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string_view origin = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  void set(const std::string& section, const std::string& key, std::string value);
  [[nodiscard]] bool has(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::optional<std::string> raw(const std::string& section,
                                               const std::string& key) const;

  [[nodiscard]] std::string get_string(const std::string& section, const std::string& key,
                                       const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& section, const std::string& key,
                                  double fallback) const;
  [[nodiscard]] int get_int(const std::string& section, const std::string& key,
                            int fallback) const;
  [[nodiscard]] std::uint64_t get_uint64(const std::string& section, const std::string& key,
                                         std::uint64_t fallback) const;
  [[nodiscard]] bool get_bool(const std::string& section, const std::string& key,
                              bool fallback) const;

  /// Throws ConfigError naming the first section or key not in `allowed`
  /// (a map from section name to its permitted keys).
  void require_known(const std::map<std::string, std::set<std::string>>& allowed) const;

  [[nodiscard]] const std::map<std::string, std::map<std::string, std::string>>& sections()
      const noexcept {
    return values_;
  }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace mmpoison
