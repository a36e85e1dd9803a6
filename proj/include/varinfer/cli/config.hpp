#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varinfer::cli {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Flat "key = value" lines. Blank lines and lines starting with '#' are
/// skipped; surrounding whitespace is trimmed. Throws ArgumentError on a line
/// without '=' or a repeated key.
ConfigEntries parse_config_text(std::string_view text);

/// Throws IoError when the file cannot be read.
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Inverse of parse_config_text, headed by a comment naming the subcommand.
std::string format_config(std::string_view subcommand, const ConfigEntries& entries);

/// Seed from VARINFER_SEED, if set. Throws ArgumentError when it is not an
/// unsigned integer.
std::optional<std::uint64_t> seed_from_environment();

std::uint64_t parse_seed(const std::string& text);

}  // namespace varinfer::cli
