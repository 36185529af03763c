#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edm/model.hpp"

namespace edm {

// Model file layout, all integers u32 little-endian:
//   "3DEM" | version (1) | header_len | header JSON (sorted keys, compact) |
//   tensor_count | per tensor: name_len, name, ndim, dims..., f32 LE payload.
// Tensors appear in parameter_names() order.
inline constexpr std::uint32_t kModelFileVersion = 1;

std::string model_header_json(const ModelConfig& config);
ModelConfig parse_model_header(std::string_view json);

std::vector<std::uint8_t> serialize_model(const Model& model);
// Rejects bad magic (format), unknown version (unsupported) and any size,
// name or shape disagreement (corruption) before allocating tensor payloads.
Model deserialize_model(std::span<const std::uint8_t> bytes);

// Returns the number of bytes written; io error on a failing sink.
std::size_t save_model(const Model& model, std::ostream& sink);
std::size_t save_model(const Model& model, const std::filesystem::path& path);

Model load_model(std::istream& source);
Model load_model(const std::filesystem::path& path);

}  // namespace edm
