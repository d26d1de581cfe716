#pragma once

namespace snsmart {

inline constexpr const char* kVersion = "0.1.0";

// Version of the study configuration / report file formats. Bump when a
// field is added, removed, or reinterpreted.
inline constexpr int kSchemaVersion = 1;

} // namespace snsmart
