#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace invit {

/// Locale-independent shortest-exact rendering with at most 17 significant
/// digits; non-finite values render as "nan", "inf" or "-inf".
std::string format_double(double value);

/// Strict locale-independent parse of the whole string.
std::optional<double> parse_double(std::string_view text);

}  // namespace invit
