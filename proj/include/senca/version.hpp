#pragma once

namespace senca {

inline constexpr const char* kVersion = "0.1.0";

}
