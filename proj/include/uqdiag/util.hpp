#pragma once
// Small shared helpers: string munging, hashing, fixed-precision formatting,
// JSONL and CSV file access.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace uqdiag::util {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);

// Replaces every "{key}" occurrence; keys absent from the map are left as-is.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);
bool contains_placeholder(std::string_view tmpl, std::string_view key);

// FNV-1a over bytes; used for cache keys and corpus digests (not security).
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// Fixed-precision decimal formatting ("%.*f"); the single formatting path for
// every table/CSV so console and file output carry identical digits.
std::string format_fixed(double value, int decimals);
double round_fixed(double value, int decimals);

// --- files ---

std::string read_file(const std::string& path);              // throws IoError
void write_file(const std::string& path, std::string_view content);
void append_line(const std::string& path, std::string_view line);
bool file_exists(const std::string& path);

// Reads a JSONL file; throws ParseError carrying the 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

// Reads a JSONL file that may end in a half-written record (crash during
// append). Complete leading records are returned; if trailing garbage was
// found the file is truncated back to the last good newline so appends can
// safely resume.
std::vector<nlohmann::json> read_jsonl_repair(const std::string& path);

void append_jsonl(const std::string& path, const nlohmann::json& record);

// Minimal CSV with quoting for commas/quotes/newlines. First row is a header.
struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_escape(std::string_view field);
Csv read_csv(const std::string& path);
void write_csv(const std::string& path, const Csv& csv);

std::string iso8601_utc(std::int64_t unix_seconds);

} // namespace uqdiag::util
