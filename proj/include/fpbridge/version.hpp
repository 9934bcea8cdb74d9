#pragma once

namespace fpbridge {

inline constexpr const char* kVersion = "0.1.0";

} // namespace fpbridge
