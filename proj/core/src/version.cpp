#include "irlpilot/version.hpp"

namespace irlpilot {

std::string_view Version() { return IRLPILOT_VERSION; }

}  // namespace irlpilot
