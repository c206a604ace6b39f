// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/config_text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tadvit/error.hpp"

namespace tadvit {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("cannot format double");
  return std::string(buf, end);
}

KeyValueText KeyValueText::parse(std::string_view text) {
  KeyValueText kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                        std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty key");
    if (kv.contains(key)) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate key '" +
                        std::string(key) + "'");
    }
    kv.entries_.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValueText KeyValueText::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValueText::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KeyValueText::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueText::set(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

bool KeyValueText::contains(std::string_view key) const { return find(key).has_value(); }

std::optional<std::string> KeyValueText::find(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

const std::string& KeyValueText::at(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw FormatError("missing key '" + std::string(key) + "'");
}

double KeyValueText::get_double(std::string_view key) const {
  const std::string& v = at(key);
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw FormatError("key '" + std::string(key) + "': '" + v + "' is not a number");
  return out;
}

std::int64_t KeyValueText::get_int(std::string_view key) const {
  const std::string& v = at(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw FormatError("key '" + std::string(key) + "': '" + v + "' is not an integer");
  return out;
}

double KeyValueText::get_double(std::string_view key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}

std::int64_t KeyValueText::get_int(std::string_view key, std::int64_t fallback) const {
  return contains(key) ? get_int(key) : fallback;
}

std::string KeyValueText::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueText::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_string();
  if (!out) throw Error("write failed for " + path);
}

}  // namespace tadvit
