#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace intentpipe {

// Insertion-ordered so artifacts keep their logical field order and are
// byte-stable across runs.
using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over the target, so readers never
// observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

// Textual form used for hashing and artifacts: 2-space indent, trailing
// newline.
std::string dump_json(const Json& value);

std::string sha256_hex(std::string_view bytes);

// Line-oriented UTF-8 tables. Blank lines and lines starting with '#' are
// skipped. Each remaining line is split on the first TAB; a line without a TAB
// yields an empty value.
struct TableRow {
  std::string key;
  std::string value;
  std::size_t line = 0;
};
std::vector<TableRow> read_table(const std::filesystem::path& path);
std::vector<TableRow> parse_table(std::string_view text);

// Word lists are tables whose values are ignored.
std::vector<std::string> read_word_list(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace intentpipe
