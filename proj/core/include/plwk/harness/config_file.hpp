#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace plwk::harness {

// Flat `key = value` text, one pair per line; '#' starts a comment; blank
// lines ignored. Keys mirror the CLI flags (see README).
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(std::string_view text);
KeyValues load_config_file(const std::filesystem::path& path);

}  // namespace plwk::harness
