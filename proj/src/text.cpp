#include "lfa/text.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <system_error>

namespace lfa {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

} // namespace

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

std::vector<Token> word_tokens(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
        out.push_back(Token{i, j});
        i = j;
    }
    return out;
}

std::vector<std::string> metric_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (const Token& t : word_tokens(text)) {
        out.push_back(to_lower(t.view(text)));
    }
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int places) {
    char buf[512];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, places);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::size_t clause_start(std::string_view text, std::size_t pos) {
    if (pos > text.size()) pos = text.size();
    std::size_t i = pos;
    while (i > 0) {
        char c = text[i - 1];
        if (c == '.' || c == ';' || c == '!' || c == '?' || c == '\n') break;
        --i;
    }
    return i;
}

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        if (c < 0x80) {
            extra = 0;
        } else if ((c & 0xe0) == 0xc0) {
            extra = 1;
            if (c < 0xc2) return false; // overlong
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3;
            if (c > 0xf4) return false;
        } else {
            return false;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            if (i + k >= s.size()) return false;
            if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return false;
        }
        i += extra + 1;
    }
    return true;
}

} // namespace lfa
