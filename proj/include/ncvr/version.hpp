#pragma once

namespace ncvr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ncvr
