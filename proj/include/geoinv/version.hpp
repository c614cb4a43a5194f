#pragma once

namespace geoinv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace geoinv
