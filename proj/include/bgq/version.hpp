#pragma once

namespace bgq {

#ifdef BGQ_VERSION
inline constexpr const char* kVersion = BGQ_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

}  // namespace bgq
