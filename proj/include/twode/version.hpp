#ifndef TWODE_VERSION_HPP
#define TWODE_VERSION_HPP

namespace twode {
inline constexpr const char* kVersion = "0.1.0";
}

#endif  // TWODE_VERSION_HPP
