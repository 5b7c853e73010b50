#pragma once

// A small TOML subset for experiment configs: comments, [table] headers,
// bare or dotted keys, and values that are numbers, booleans, basic strings
// or flat arrays of those. Keys come back flattened ("phase.trials").

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ripforge/errors.hpp"

namespace ripforge::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> v;

  bool is_number() const { return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v); }
};

class Table {
 public:
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, Value>& entries() const { return values_; }
  void set(const std::string& key, Value v, std::size_t offset) {
    if (!values_.emplace(key, std::move(v)).second) {
      throw ParseError("duplicate key '" + key + "'", offset);
    }
  }

  double number(const std::string& key) const {
    const Value& v = at(key);
    if (const auto* i = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v.v)) return *d;
    throw ConfigError("config key '" + key + "' must be a number");
  }

  std::int64_t integer(const std::string& key) const {
    const Value& v = at(key);
    if (const auto* i = std::get_if<std::int64_t>(&v.v)) return *i;
    throw ConfigError("config key '" + key + "' must be an integer");
  }

  bool boolean(const std::string& key) const {
    const Value& v = at(key);
    if (const auto* b = std::get_if<bool>(&v.v)) return *b;
    throw ConfigError("config key '" + key + "' must be true or false");
  }

  std::string string(const std::string& key) const {
    const Value& v = at(key);
    if (const auto* s = std::get_if<std::string>(&v.v)) return *s;
    throw ConfigError("config key '" + key + "' must be a string");
  }

  std::vector<double> numbers(const std::string& key) const {
    const Value& v = at(key);
    const auto* arr = std::get_if<Array>(&v.v);
    if (!arr) throw ConfigError("config key '" + key + "' must be an array");
    std::vector<double> out;
    for (const Value& e : *arr) {
      if (const auto* i = std::get_if<std::int64_t>(&e.v)) {
        out.push_back(static_cast<double>(*i));
      } else if (const auto* d = std::get_if<double>(&e.v)) {
        out.push_back(*d);
      } else {
        throw ConfigError("config key '" + key + "' must hold numbers only");
      }
    }
    return out;
  }

  /// Value lookups with a fallback when the key is absent.
  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) const {
    return has(key) ? boolean(key) : fallback;
  }
  std::string string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

 private:
  const Value& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }

  std::map<std::string, Value> values_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Table run() {
    Table t;
    std::string prefix;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++i_;
        skip_inline_space();
        prefix = key();
        skip_inline_space();
        expect(']');
        end_of_line();
        continue;
      }
      const std::size_t at = i_;
      const std::string k = key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Value v = value();
      end_of_line();
      t.set(prefix.empty() ? k : prefix + "." + k, std::move(v), at);
    }
    return t;
  }

 private:
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("TOML: " + what, i_); }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') ++i_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        ++i_;
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (!eof() && peek() == '\r') ++i_;
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
    if (!eof()) ++i_;
  }

  std::string bare_key() {
    const std::size_t start = i_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-')) {
      ++i_;
    }
    if (i_ == start) fail("expected a key");
    return s_.substr(start, i_ - start);
  }

  std::string key() {
    std::string k = bare_key();
    while (!eof() && peek() == '.') {
      ++i_;
      k += "." + bare_key();
    }
    return k;
  }

  Value value() {
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '"') return {string()};
    if (c == '[') return {array()};
    if (s_.compare(i_, 4, "true") == 0) {
      i_ += 4;
      return {true};
    }
    if (s_.compare(i_, 5, "false") == 0) {
      i_ += 5;
      return {false};
    }
    return number();
  }

  std::string string() {
    expect('"');
    std::string out;
    while (!eof() && peek() != '"') {
      if (peek() == '\n') fail("unterminated string");
      if (peek() == '\\') {
        ++i_;
        if (eof()) fail("unterminated escape");
        switch (peek()) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail("unsupported escape");
        }
        ++i_;
      } else {
        out += s_[i_++];
      }
    }
    expect('"');
    return out;
  }

  Array array() {
    expect('[');
    Array out;
    while (true) {
      skip_blank_lines();
      if (!eof() && peek() == ']') {
        ++i_;
        return out;
      }
      out.push_back(value());
      skip_blank_lines();
      if (!eof() && peek() == ',') {
        ++i_;
        continue;
      }
      skip_blank_lines();
      expect(']');
      return out;
    }
  }

  Value number() {
    const std::size_t start = i_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == '_')) {
      ++i_;
    }
    std::string tok;
    for (std::size_t k = start; k < i_; ++k) {
      if (s_[k] != '_') tok += s_[k];
    }
    if (tok.empty()) fail("expected a value");
    if (tok.front() == '+') tok.erase(0, 1);
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (is_float) {
      double d = 0.0;
      const auto r = std::from_chars(b, e, d);
      if (r.ec != std::errc() || r.ptr != e) throw ParseError("TOML: bad number '" + tok + "'", start);
      return {d};
    }
    std::int64_t n = 0;
    const auto r = std::from_chars(b, e, n);
    if (r.ec != std::errc() || r.ptr != e) throw ParseError("TOML: bad number '" + tok + "'", start);
    return {n};
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

}  // namespace detail

inline Table parse(const std::string& text) { return detail::Parser(text).run(); }

inline Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace ripforge::toml
