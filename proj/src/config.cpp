#include "merr/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "merr/error.hpp"
#include "merr/io.hpp"

namespace merr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_real(const std::string& key, const std::string& text) {
  try {
    return parse_real(text);
  } catch (const DataError&) {
    throw InvalidArgument("config key '" + key + "': not a number: '" + text + "'");
  }
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string& Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgument("config: missing key '" + key + "'");
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double Config::real(const std::string& key) const { return to_real(key, get(key)); }

double Config::real_or(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

std::int64_t Config::integer(const std::string& key) const {
  const double v = real(key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw InvalidArgument("config key '" + key + "': not an integer");
  return static_cast<std::int64_t>(v);
}

std::int64_t Config::integer_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool Config::flag_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = get(key);
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw InvalidArgument("config key '" + key + "': expected a boolean");
}

std::vector<double> Config::reals(const std::string& key) const {
  const std::string& v = get(key);
  std::vector<double> out;
  const auto range = v.find("..");
  if (range != std::string::npos) {
    const double lo = to_real(key, trim(std::string_view(v).substr(0, range)));
    const double hi = to_real(key, trim(std::string_view(v).substr(range + 2)));
    if (!(lo > 0.0 && hi >= lo)) throw InvalidArgument("config key '" + key + "': bad geometric range");
    for (double x = lo; x <= hi * (1.0 + 1e-12); x *= 2.0) out.push_back(x);
    return out;
  }
  std::stringstream ss(v);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const std::string t = trim(field);
    if (!t.empty()) out.push_back(to_real(key, t));
  }
  if (out.empty()) throw InvalidArgument("config key '" + key + "': empty list");
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (double v : reals(key)) {
    if (v != std::floor(v)) throw InvalidArgument("config key '" + key + "': expected integers");
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [k, v] : entries_) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace merr
