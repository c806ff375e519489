#include "plwk/harness/config_file.hpp"

#include "plwk/errors.hpp"

#include <fstream>
#include <sstream>

namespace plwk::harness {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValues parse_config_text(std::string_view text) {
  KeyValues values;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;

    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      raise(ErrorCode::invalid_config,
            "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = trim(std::string_view(trimmed).substr(eq + 1));
    if (key.empty()) {
      raise(ErrorCode::invalid_config,
            "config line " + std::to_string(line_no) + ": empty key");
    }
    values[key] = value;
  }
  return values;
}

KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorCode::invalid_config, "cannot read config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace plwk::harness
