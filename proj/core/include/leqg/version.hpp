#ifndef LEQG_VERSION_HPP_
#define LEQG_VERSION_HPP_

namespace leqg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace leqg

#endif  // LEQG_VERSION_HPP_
