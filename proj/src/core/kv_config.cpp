#include "core/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace stam {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<KvSection> parse_kv_text(const std::string& text, Err error_code) {
  std::vector<KvSection> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        fail(error_code, "line " + std::to_string(line_no) + ": malformed section header");
      sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(error_code, "line " + std::to_string(line_no) + ": expected key = value");
    if (sections.empty())
      fail(error_code, "line " + std::to_string(line_no) + ": key before any [section]");
    KvSection::Entry entry;
    entry.key = trim(line.substr(0, eq));
    entry.value = trim(line.substr(eq + 1));
    entry.line = line_no;
    if (entry.key.empty())
      fail(error_code, "line " + std::to_string(line_no) + ": empty key");
    sections.back().entries.push_back(std::move(entry));
  }
  return sections;
}

std::vector<KvSection> parse_kv_file(const std::filesystem::path& path, Err error_code) {
  std::ifstream in(path);
  if (!in) fail(Err::io_failure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_kv_text(buffer.str(), error_code);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

long long kv_int(const std::string& value, const std::string& key, Err error_code) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    fail(error_code, "key '" + key + "': expected integer, got '" + value + "'");
  return out;
}

double kv_double(const std::string& value, const std::string& key, Err error_code) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    fail(error_code, "key '" + key + "': expected number, got '" + value + "'");
  return out;
}

}  // namespace stam
