#include "hiersearch/manifest.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "hiersearch/error.hpp"
#include "hiersearch/io.hpp"

namespace hiersearch {

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"config", config},
          {"input_hashes", input_hashes},
          {"tool_version", tool_version},
          {"seed", seed},
          {"timestamp", timestamp}};
}

std::string RunManifest::hash() const {
  nlohmann::json j = to_json();
  j.erase("timestamp");
  return fnv1a64_hex(j.dump());
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j = to_json();
  j["manifest_hash"] = hash();
  write_json_file(path, j);
}

std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

// Minimal TOML reader for flat `key = value` files: strings, booleans,
// numbers and arrays of numbers. Tables and nested values are rejected.
nlohmann::json parse_toml_subset(const std::string& text,
                                 const std::string& path) {
  nlohmann::json out = nlohmann::json::object();
  std::istringstream in(text);
  std::string line;
  int number = 0;

  auto parse_scalar = [&](std::string token) -> nlohmann::json {
    if (token.size() >= 2 && token.front() == '"' && token.back() == '"')
      return token.substr(1, token.size() - 2);
    if (token == "true") return true;
    if (token == "false") return false;
    try {
      size_t used = 0;
      if (token.find_first_of(".eE") != std::string::npos) {
        double v = std::stod(token, &used);
        if (used == token.size()) return v;
      } else {
        long long v = std::stoll(token, &used, 10);
        if (used == token.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail(ErrorKind::ParseError, path + " line " + std::to_string(number) +
                                    ": cannot parse value '" + token + "'");
  };

  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };

  while (std::getline(in, line)) {
    ++number;
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    std::string content = trim(line);
    if (content.empty()) continue;
    if (content.front() == '[')
      fail(ErrorKind::ParseError, path + " line " + std::to_string(number) +
                                      ": TOML tables are not supported");
    size_t eq = content.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::ParseError, path + " line " + std::to_string(number) +
                                      ": expected 'key = value'");
    std::string key = trim(content.substr(0, eq));
    std::string value = trim(content.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(ErrorKind::ParseError, path + " line " + std::to_string(number) +
                                      ": empty key or value");
    if (value.front() == '[') {
      if (value.back() != ']')
        fail(ErrorKind::ParseError, path + " line " + std::to_string(number) +
                                        ": unterminated array");
      nlohmann::json array = nlohmann::json::array();
      std::string body = value.substr(1, value.size() - 2);
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        array.push_back(parse_scalar(item));
      }
      out[key] = array;
    } else {
      out[key] = parse_scalar(value);
    }
  }
  return out;
}

}  // namespace

nlohmann::json load_config_file(const std::string& path) {
  std::string text = read_text_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml")
    return parse_toml_subset(text, path);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded())
    fail(ErrorKind::ParseError, "'" + path + "' is not valid JSON");
  if (!value.is_object())
    fail(ErrorKind::ParseError, "'" + path + "' must hold a JSON object");
  return value;
}

}  // namespace hiersearch
