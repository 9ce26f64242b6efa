#pragma once

#include <string_view>

namespace irlpilot {

/// Library version as "major.minor.patch".
std::string_view Version();

}  // namespace irlpilot
