// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace eegagent {

/// Fixed-point text with trailing zeros removed: 1200.0 → "1200", 0.25 → "0.25".
std::string format_number(double value, int max_decimals = 3);

/// Fixed-point text with exactly `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

}  // namespace eegagent
