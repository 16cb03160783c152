#pragma once

// Minimal TOML-style configuration reader.
//
// Supported: `key = value` pairs, `[table]` headers, `[[array]]` table
// arrays, `#` comments, and values that are double-quoted strings, integers,
// floats, true/false, or single-line arrays of those. Nested tables, dotted
// keys, inline tables and multi-line strings are rejected.

#include "thzcs/core.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace thzcs {

struct ConfigValue {
  enum class Kind { String, Integer, Float, Bool, Array };
  Kind kind = Kind::String;
  std::string text;
  std::int64_t integer = 0;
  double number = 0.0;
  bool flag = false;
  std::vector<ConfigValue> items;
  std::size_t line = 0;

  std::string where() const { return "line " + std::to_string(line); }

  double as_double(std::string_view key) const {
    if (kind == Kind::Integer) return static_cast<double>(integer);
    if (kind == Kind::Float) return number;
    throw Error(ErrorCode::InvalidConfig, where() + ": '" + std::string(key) + "' must be a number");
  }

  std::int64_t as_int(std::string_view key) const {
    if (kind != Kind::Integer)
      throw Error(ErrorCode::InvalidConfig, where() + ": '" + std::string(key) + "' must be an integer");
    return integer;
  }

  std::uint64_t as_u64(std::string_view key) const {
    const auto v = as_int(key);
    if (v < 0) throw Error(ErrorCode::InvalidConfig, where() + ": '" + std::string(key) + "' must be >= 0");
    return static_cast<std::uint64_t>(v);
  }

  bool as_bool(std::string_view key) const {
    if (kind != Kind::Bool)
      throw Error(ErrorCode::InvalidConfig, where() + ": '" + std::string(key) + "' must be true or false");
    return flag;
  }

  const std::string& as_string(std::string_view key) const {
    if (kind != Kind::String)
      throw Error(ErrorCode::InvalidConfig, where() + ": '" + std::string(key) + "' must be a string");
    return text;
  }

  /// Scalars are accepted as one-element arrays.
  std::vector<ConfigValue> as_array() const {
    if (kind == Kind::Array) return items;
    return {*this};
  }
};

using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigDocument {
  std::map<std::string, ConfigTable> tables;  // "" is the root table
  std::map<std::string, std::vector<ConfigTable>> arrays;

  const ConfigTable* table(const std::string& name) const {
    auto it = tables.find(name);
    return it == tables.end() ? nullptr : &it->second;
  }
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line) + ": " + msg);
}

inline bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

/// Drops a trailing comment, respecting quoted strings.
inline std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    else if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  ConfigValue parse() {
    auto v = value();
    skip_ws();
    if (pos_ != s_.size()) fail(line_, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    ConfigValue v;
    v.line = line_;
    const char c = s_[pos_];
    if (c == '"') {
      v.kind = ConfigValue::Kind::String;
      v.text = string();
    } else if (c == '[') {
      v.kind = ConfigValue::Kind::Array;
      ++pos_;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(value());
        skip_ws();
        if (pos_ >= s_.size()) fail(line_, "unterminated array");
        if (s_[pos_] == ',') {
          ++pos_;
          skip_ws();
          if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            break;
          }
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          break;
        }
        fail(line_, "expected ',' or ']' in array");
      }
    } else {
      std::size_t end = pos_;
      while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != ' ' && s_[end] != '\t') ++end;
      const auto tok = s_.substr(pos_, end - pos_);
      pos_ = end;
      scalar(tok, v);
    }
    return v;
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        const char e = s_[++pos_];
        if (e == 'n') out.push_back('\n');
        else if (e == 't') out.push_back('\t');
        else if (e == '"' || e == '\\') out.push_back(e);
        else fail(line_, std::string("unsupported escape \\") + e);
      } else {
        out.push_back(s_[pos_]);
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) fail(line_, "unterminated string");
    ++pos_;
    return out;
  }

  void scalar(std::string_view tok, ConfigValue& v) {
    if (tok == "true" || tok == "false") {
      v.kind = ConfigValue::Kind::Bool;
      v.flag = tok == "true";
      return;
    }
    std::string clean;
    for (char ch : tok)
      if (ch != '_') clean.push_back(ch);
    std::string_view num = clean;
    if (!num.empty() && num.front() == '+') num.remove_prefix(1);
    const bool is_float = num.find_first_of(".eE") != std::string_view::npos || num == "inf" || num == "-inf" ||
                          num == "nan";
    if (!is_float) {
      auto res = std::from_chars(num.data(), num.data() + num.size(), v.integer);
      if (res.ec == std::errc() && res.ptr == num.data() + num.size() && !num.empty()) {
        v.kind = ConfigValue::Kind::Integer;
        return;
      }
    } else {
      auto res = std::from_chars(num.data(), num.data() + num.size(), v.number);
      if (res.ec == std::errc() && res.ptr == num.data() + num.size()) {
        v.kind = ConfigValue::Kind::Float;
        return;
      }
    }
    fail(line_, "cannot parse value '" + std::string(tok) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

}  // namespace config_detail

inline ConfigDocument parse_config(std::string_view text) {
  using namespace config_detail;
  ConfigDocument doc;
  doc.tables[""];
  ConfigTable* current = &doc.tables[""];
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.starts_with("[[")) {
      if (!line.ends_with("]]")) fail(line_no, "malformed table array header");
      const auto name = trim(line.substr(2, line.size() - 4));
      if (!valid_key(name)) fail(line_no, "invalid table name '" + std::string(name) + "'");
      auto& arr = doc.arrays[std::string(name)];
      arr.emplace_back();
      current = &arr.back();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed table header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_key(name)) fail(line_no, "invalid table name '" + std::string(name) + "'");
      if (doc.tables.count(std::string(name)) && !name.empty())
        fail(line_no, "duplicate table [" + std::string(name) + "]");
      current = &doc.tables[std::string(name)];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(line_no, "invalid key '" + std::string(key) + "'");
    if (current->count(std::string(key))) fail(line_no, "duplicate key '" + std::string(key) + "'");
    (*current)[std::string(key)] = ValueParser(trim(line.substr(eq + 1)), line_no).parse();
  }
  return doc;
}

inline ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// Rejects keys outside `allowed`, naming the offending line.
inline void require_known_keys(const ConfigTable& table, std::string_view table_name,
                               std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : table) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok)
      throw Error(ErrorCode::InvalidConfig,
                  value.where() + ": unknown key '" + key + "' in [" + std::string(table_name) + "]");
  }
}

}  // namespace thzcs
