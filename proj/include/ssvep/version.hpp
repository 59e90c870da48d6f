#pragma once

namespace ssvep {
inline constexpr const char* kVersion = "0.1.0";
}
