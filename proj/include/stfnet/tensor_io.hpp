#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "stfnet/tensor.hpp"

namespace stfnet {

/// Either kind of tensor as stored on disk.
using AnyTensor = std::variant<RealTensor, ComplexTensor>;

/// Binary layout: 8-byte magic "STFNET01", u32 little-endian header length,
/// UTF-8 JSON header {"dtype": "f64"|"c64", "shape": [...]}, then
/// little-endian f64 payload (re plane then im plane for "c64").
inline constexpr char kTensorMagic[8] = {'S', 'T', 'F', 'N', 'E', 'T', '0', '1'};

std::string encode_tensor(const AnyTensor& tensor);
AnyTensor decode_tensor(const std::string& bytes);

void write_tensor(const std::filesystem::path& path, const AnyTensor& tensor);
AnyTensor read_tensor(const std::filesystem::path& path);
RealTensor read_real_tensor(const std::filesystem::path& path);
ComplexTensor read_complex_tensor(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace stfnet
