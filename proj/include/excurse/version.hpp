#pragma once

namespace excurse {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace excurse
