#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace stam {

/// Plain-text "[section]" + "key = value" file. Blank lines and lines
/// starting with '#' are ignored. Repeated sections are preserved in file
/// order (scene specs rely on that).
struct KvSection {
  std::string name;
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  std::vector<Entry> entries;

  const std::string* find(const std::string& key) const {
    for (const Entry& e : entries)
      if (e.key == key) return &e.value;
    return nullptr;
  }
};

std::vector<KvSection> parse_kv_text(const std::string& text, Err error_code);
std::vector<KvSection> parse_kv_file(const std::filesystem::path& path, Err error_code);

/// Strict scalar conversions; fail with `error_code` on malformed input.
long long kv_int(const std::string& value, const std::string& key, Err error_code);
double kv_double(const std::string& value, const std::string& key, Err error_code);

}  // namespace stam
