#include "uqdiag/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uqdiag/errors.hpp"

namespace uqdiag::util {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find('\n', start);
        if (end == std::string_view::npos) {
            lines.emplace_back(s.substr(start));
            break;
        }
        std::string_view line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = end + 1;
    }
    return lines;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        std::size_t close = tmpl.find('}', open);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(open));
            break;
        }
        std::string key(tmpl.substr(open + 1, close - open - 1));
        auto it = values.find(key);
        if (it != values.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl.substr(open, close - open + 1));
        }
        pos = close + 1;
    }
    return out;
}

bool contains_placeholder(std::string_view tmpl, std::string_view key) {
    std::string needle = "{" + std::string(key) + "}";
    return tmpl.find(needle) != std::string_view::npos;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    // avoid the "-0.000" artifact
    std::string s(buf);
    if (s.find_first_not_of("-.0") == std::string::npos && s[0] == '-') s.erase(0, 1);
    return s;
}

double round_fixed(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void append_line(const std::string& path, std::string_view line) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::IoError, "cannot append to " + path);
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "append failed for " + path);
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::string content = read_file(path);
    std::vector<nlohmann::json> records;
    int line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        ++line_no;
        std::string_view line(content.data() + start, end - start);
        start = end + 1;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw Error(ErrorCode::ParseError,
                        path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        records.push_back(std::move(j));
    }
    return records;
}

std::vector<nlohmann::json> read_jsonl_repair(const std::string& path) {
    if (!file_exists(path)) return {};
    std::string content = read_file(path);
    std::vector<nlohmann::json> records;
    std::size_t good_end = 0;
    std::size_t start = 0;
    bool damaged = false;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        bool has_newline = end != std::string::npos;
        if (!has_newline) end = content.size();
        std::string_view line(content.data() + start, end - start);
        if (trim(line).empty()) {
            if (has_newline) {
                good_end = end + 1;
                start = end + 1;
                continue;
            }
            break;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !has_newline) {
            // half-written trailing record: drop it and everything after
            damaged = true;
            break;
        }
        records.push_back(std::move(j));
        good_end = end + 1;
        start = end + 1;
    }
    if (damaged) {
        std::filesystem::resize_file(path, good_end);
    }
    return records;
}

void append_jsonl(const std::string& path, const nlohmann::json& record) {
    append_line(path, record.dump());
}

std::string csv_escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

namespace {

std::vector<std::string> parse_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

} // namespace

Csv read_csv(const std::string& path) {
    Csv csv;
    auto lines = split_lines(read_file(path));
    bool first = true;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        auto fields = parse_csv_line(line);
        if (first) {
            csv.header = std::move(fields);
            first = false;
        } else {
            csv.rows.push_back(std::move(fields));
        }
    }
    if (first) throw Error(ErrorCode::ParseError, path + ": empty CSV");
    return csv;
}

void write_csv(const std::string& path, const Csv& csv) {
    std::string out;
    auto write_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += csv_escape(row[i]);
        }
        out.push_back('\n');
    };
    write_row(csv.header);
    for (const auto& row : csv.rows) write_row(row);
    write_file(path, out);
}

std::string iso8601_utc(std::int64_t unix_seconds) {
    std::time_t t = static_cast<std::time_t>(unix_seconds);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace uqdiag::util
