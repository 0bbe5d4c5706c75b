#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "graphboost/boost.hpp"

namespace graphboost {

/// Model container: "GBST" magic, u32 format version, then tagged sections
/// (4-byte tag, u64 payload length). All integers and floats little-endian;
/// tensors are row-major f64 preceded by a (rows, cols) u64 header.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string serialize_model(const Ensemble& ensemble);
Ensemble deserialize_model(std::string_view bytes);

void save_model(const std::filesystem::path& path, const Ensemble& ensemble);
Ensemble load_model(const std::filesystem::path& path);

}  // namespace graphboost
