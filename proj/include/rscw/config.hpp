#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

// Flat key=value configuration with three precedence layers, strongest
// first: explicit command-line flags, RSCW_-prefixed environment variables,
// then file entries.  Keys are lowercase words with underscores; the
// environment variable for key "mau_count" is RSCW_MAU_COUNT.  File syntax:
// one key=value per line, '#' starts a comment, blank lines and surrounding
// whitespace are ignored.

namespace rscw {

class KvConfig {
 public:
  KvConfig() = default;

  // Parses file text; malformed lines (no '=', empty key) throw
  // std::runtime_error naming the line number.
  static KvConfig parse(const std::string& text);
  static KvConfig from_file(const std::string& path);

  // Pulls every RSCW_* variable from the process environment.
  void apply_environment();

  // Registers a flag value (highest precedence).
  void set_flag(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  // Lookup honoring precedence; throws std::out_of_range when absent.
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& dflt) const;

  // Typed getters; a present but malformed value throws std::runtime_error
  // naming the key.  Booleans accept 0/1/true/false/yes/no/on/off.
  std::int64_t get_i64(const std::string& key, std::int64_t dflt) const;
  double get_f64(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  // All known keys, sorted, with their effective values.
  std::vector<std::pair<std::string, std::string>> effective() const;

 private:
  std::map<std::string, std::string> file_, env_, flags_;
};

}  // namespace rscw
