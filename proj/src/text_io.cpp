#include "hhe/text_io.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "hhe/error.hpp"

namespace hhe {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, const std::string& where) {
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw FormatError(where + ": invalid number '" + std::string(token) + "'");
    }
    if (!std::isfinite(value)) {
        throw FormatError(where + ": non-finite value '" + std::string(token) + "'");
    }
    return value;
}

long long parse_int(std::string_view token, const std::string& where) {
    long long value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw FormatError(where + ": invalid integer '" + std::string(token) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace hhe
