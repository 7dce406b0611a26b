#pragma once

namespace mgmrf {

inline constexpr const char* version = "0.1.0";

}  // namespace mgmrf
