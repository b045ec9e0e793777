#pragma once

#include <string>
#include <string_view>

namespace shapstab {

// 17 significant digits; parses back to the identical double.
std::string format_full(double value);

// 6 significant digits, for human-readable tables.
std::string format_sig6(double value);

// Strict decimal parse (optional sign, optional exponent). Throws
// std::runtime_error on anything else, including non-finite values.
double parse_double(std::string_view cell);

}  // namespace shapstab
