#pragma once

namespace safeset {

inline constexpr const char* kToolName = "safeset";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace safeset
