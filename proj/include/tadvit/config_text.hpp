// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tadvit {

/// Ordered "key = value" text used by every human-readable file the project
/// writes: model configs, stage configs, metric and bench reports. Blank
/// lines and lines starting with '#' are ignored; keys keep insertion order.
class KeyValueText {
 public:
  static KeyValueText parse(std::string_view text);
  static KeyValueText load(const std::string& path);

  void set(const std::string& key, std::string value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }

  bool contains(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;
  /// Throws FormatError naming the key when it is absent.
  const std::string& at(std::string_view key) const;

  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

}  // namespace tadvit
