#pragma once

namespace tabml {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kConfigFormatVersion = 1;

}  // namespace tabml
