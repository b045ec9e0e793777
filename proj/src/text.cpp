#include "shapstab/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace shapstab {

namespace {

std::string format_general(double value, int significant_digits) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                      std::chars_format::general, significant_digits);
    return std::string(buffer, result.ptr);
}

}  // namespace

std::string format_full(double value) {
    return format_general(value, 17);
}

std::string format_sig6(double value) {
    return format_general(value, 6);
}

double parse_double(std::string_view cell) {
    std::string_view body = cell;
    if (!body.empty() && body.front() == '+') {
        body.remove_prefix(1);  // from_chars accepts '-' but not '+'
    }
    double value = 0.0;
    const auto result = std::from_chars(body.data(), body.data() + body.size(), value);
    if (result.ec != std::errc{} || result.ptr != body.data() + body.size() || body.empty()) {
        throw std::runtime_error("'" + std::string(cell) + "' is not a number");
    }
    if (!std::isfinite(value)) {
        throw std::runtime_error("'" + std::string(cell) + "' is not finite");
    }
    return value;
}

}  // namespace shapstab
