#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scholar {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string trim_right(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);

// Word characters are ASCII alphanumerics and any byte >= 0x80, so a
// boundary check never splits a multi-byte UTF-8 letter.
bool is_word_byte(unsigned char c);

// Whitespace-delimited tokens.
std::vector<std::string> split_ws(std::string_view s);
std::size_t count_ws_tokens(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercased alphanumeric runs; everything else separates.
std::vector<std::string> tokenize(std::string_view s);

// Index of the matching close bracket for the '{' or '[' at `open`,
// honoring JSON string literals in either quote style. npos if unbalanced.
std::size_t match_bracket(std::string_view s, std::size_t open);

// Truncates at a UTF-8 character boundary no later than max_bytes.
std::string utf8_prefix(std::string_view s, std::size_t max_bytes);

}  // namespace text

// SplitMix64 step; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Uniform integer in [0, n) from a 64-bit engine by rejection sampling.
// Fixed across standard libraries, unlike std::uniform_int_distribution.
template <typename Engine>
std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t v;
    do {
        v = eng();
    } while (v >= limit);
    return v % n;
}

template <typename T, typename Engine>
void stable_shuffle(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

namespace jsonl {

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Calls fn(line_number, parsed) for every non-blank line. Malformed JSON
// is reported through on_error when given, otherwise thrown as ParseError.
void for_each(std::istream& in,
              const std::function<void(std::size_t, const json&)>& fn,
              const std::function<void(std::size_t, const std::string&)>& on_error = {});

std::vector<json> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<ordered_json>& rows);

}  // namespace jsonl

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace scholar
