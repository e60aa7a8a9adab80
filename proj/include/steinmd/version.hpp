#pragma once

namespace steinmd {
inline constexpr const char* kVersion = "0.1.0";
}
