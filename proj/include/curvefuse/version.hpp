#pragma once

namespace curvefuse {

inline constexpr const char* kVersion = "0.1.0";

}
