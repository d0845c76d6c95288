#include "rscw/config.hpp"

#include <cctype>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "rscw/io.hpp"

extern char** environ;

namespace rscw {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    ++line_no;
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key=value");
    const std::string key = lower(trim(line.substr(0, eq)));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key");
    cfg.file_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KvConfig KvConfig::from_file(const std::string& path) {
  return parse(load_text(path));
}

void KvConfig::apply_environment() {
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind("RSCW_", 0) != 0) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 5) continue;
    env_[lower(entry.substr(5, eq - 5))] = entry.substr(eq + 1);
  }
}

void KvConfig::set_flag(const std::string& key, const std::string& value) {
  flags_[lower(key)] = value;
}

bool KvConfig::has(const std::string& key) const {
  const std::string k = lower(key);
  return flags_.count(k) || env_.count(k) || file_.count(k);
}

std::string KvConfig::get(const std::string& key) const {
  const std::string k = lower(key);
  if (auto it = flags_.find(k); it != flags_.end()) return it->second;
  if (auto it = env_.find(k); it != env_.end()) return it->second;
  if (auto it = file_.find(k); it != file_.end()) return it->second;
  throw std::out_of_range("config key not set: " + key);
}

std::string KvConfig::get_or(const std::string& key,
                             const std::string& dflt) const {
  return has(key) ? get(key) : dflt;
}

std::int64_t KvConfig::get_i64(const std::string& key,
                               std::int64_t dflt) const {
  if (!has(key)) return dflt;
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not an integer: " + v);
  }
}

double KvConfig::get_f64(const std::string& key, double dflt) const {
  if (!has(key)) return dflt;
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not a number: " + v);
  }
}

bool KvConfig::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  const std::string v = lower(get(key));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key " + key + ": not a boolean: " + v);
}

std::vector<std::pair<std::string, std::string>> KvConfig::effective() const {
  std::set<std::string> keys;
  for (const auto& [k, v] : file_) keys.insert(k);
  for (const auto& [k, v] : env_) keys.insert(k);
  for (const auto& [k, v] : flags_) keys.insert(k);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys) out.emplace_back(k, get(k));
  return out;
}

}  // namespace rscw
