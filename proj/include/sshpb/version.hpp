#pragma once

namespace sshpb {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFileFormatVersion = 1;

}  // namespace sshpb
